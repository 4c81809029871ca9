#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "polyreg/random.hpp"
#include "polyreg/sample.hpp"

namespace polyreg::testing {

inline WeightedSample sample1d(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& w = {}) {
    WeightedSample s(1);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double xv = x[j];
        s.add(std::span<const double>(&xv, 1), y[j], w.empty() ? 1.0 : w[j]);
    }
    return s;
}

// x uniform in [lo, hi]^dim, y = f(x) + N(0, noise), unit weights unless
// `weights` is set, in which case w ~ U(0.5, 2).
inline WeightedSample randomSample(Rng& rng, std::size_t n, std::size_t dim, double lo, double hi,
                                   const std::function<double(std::span<const double>)>& f, double noise,
                                   bool weights = false) {
    WeightedSample s(dim);
    s.reserve(n);
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < n; ++j) {
        for (auto& v : x) v = rng.uniform(lo, hi);
        const double y = f(x) + noise * rng.normal();
        s.add(x, y, weights ? rng.uniform(0.5, 2.0) : 1.0);
    }
    return s;
}

inline double relErr(double a, double b) {
    const double d = std::abs(a - b);
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0.0 ? d / s : d;
}

// Classical unweighted variance of the mean, two-pass.
inline double classicalVarianceOfMean(const std::vector<double>& a) {
    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : a) ss += (mean - v) * (mean - v);
    return ss / (n * (n - 1.0));
}

}  // namespace polyreg::testing
