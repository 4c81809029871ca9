#include "polyreg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polyreg/error.hpp"

namespace polyreg {

std::int64_t basisSize(int dim, int degree) {
    if (dim < 1) throw InputError("basis dimension must be >= 1");
    if (degree < 0) throw InputError("polynomial degree must be >= 0");
    const __int128 n = static_cast<__int128>(dim) + degree;
    const int k = std::min(dim, degree);
    __int128 result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
        if (result > std::numeric_limits<std::int64_t>::max()) {
            throw InputError("basis size overflows 64 bits for dim " + std::to_string(dim) +
                             ", degree " + std::to_string(degree));
        }
    }
    return static_cast<std::int64_t>(result);
}

namespace {

void appendDegree(int dim, int remaining, std::size_t pos, Exponent& cur,
                  std::vector<Exponent>& out) {
    if (pos + 1 == static_cast<std::size_t>(dim)) {
        cur[pos] = remaining;
        out.push_back(cur);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        cur[pos] = e;
        appendDegree(dim, remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

}  // namespace

MonomialSet::MonomialSet(int dim, int maxDegree) : dim_(dim), maxDegree_(maxDegree) {
    const auto n = basisSize(dim, maxDegree);
    exps_.reserve(static_cast<std::size_t>(n));
    Exponent cur(static_cast<std::size_t>(dim), 0);
    for (int d = 0; d <= maxDegree; ++d) appendDegree(dim, d, 0, cur, exps_);

    degrees_.resize(exps_.size());
    parent_.assign(exps_.size(), 0);
    axis_.assign(exps_.size(), -1);
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        degrees_[i] = 0;
        for (int e : exps_[i]) degrees_[i] += e;
        lookup_.emplace(exps_[i], i);
    }
    for (std::size_t i = 1; i < exps_.size(); ++i) {
        Exponent e = exps_[i];
        const auto it = std::find_if(e.begin(), e.end(), [](int v) { return v > 0; });
        const int ax = static_cast<int>(it - e.begin());
        --e[static_cast<std::size_t>(ax)];
        axis_[i] = ax;
        parent_[i] = lookup_.at(e);
    }
}

std::size_t MonomialSet::countUpTo(int d) const {
    if (d < 0) return 0;
    if (d >= maxDegree_) return exps_.size();
    return static_cast<std::size_t>(basisSize(dim_, d));
}

std::size_t MonomialSet::indexOf(std::span<const int> e) const {
    const auto it = lookup_.find(Exponent(e.begin(), e.end()));
    if (it == lookup_.end()) throw InputError("monomial not present in basis");
    return it->second;
}

std::size_t MonomialSet::productIndex(std::size_t i, std::size_t j) const {
    Exponent e = exps_[i];
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += exps_[j][k];
    return indexOf(e);
}

void MonomialSet::evaluate(std::span<const double> x, std::span<double> out) const {
    out[0] = 1.0;
    for (std::size_t i = 1; i < exps_.size(); ++i) {
        out[i] = out[parent_[i]] * x[static_cast<std::size_t>(axis_[i])];
    }
}

void MonomialSet::evaluate(std::span<const double> x, std::span<double> hi, std::span<double> lo) const {
    hi[0] = 1.0;
    lo[0] = 0.0;
    for (std::size_t i = 1; i < exps_.size(); ++i) {
        const double z = x[static_cast<std::size_t>(axis_[i])];
        const double p = hi[parent_[i]] * z;
        hi[i] = p;
        lo[i] = std::fma(hi[parent_[i]], z, -p) + lo[parent_[i]] * z;
    }
}

AffineMap AffineMap::identity(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

AffineMap AffineMap::standardizing(const WeightedSample& sample) {
    const std::size_t dim = sample.dim();
    AffineMap m = identity(dim);
    if (sample.empty()) return m;
    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < sample.size(); ++j) {
        const auto x = sample.x(j);
        for (std::size_t k = 0; k < dim; ++k) {
            m.center[k] += x[k];
            lo[k] = std::min(lo[k], x[k]);
            hi[k] = std::max(hi[k], x[k]);
        }
    }
    for (std::size_t k = 0; k < dim; ++k) {
        m.center[k] /= static_cast<double>(sample.size());
        const double half = 0.5 * (hi[k] - lo[k]);
        m.scale[k] = half > 0.0 ? 1.0 / half : 1.0;
    }
    return m;
}

void AffineMap::apply(std::span<const double> x, std::span<double> out) const {
    for (std::size_t k = 0; k < center.size(); ++k) out[k] = scale[k] * (x[k] - center[k]);
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
    std::vector<double> out(center.size());
    apply(x, out);
    return out;
}

BasisSpec::BasisSpec(int degree, AffineMap affine)
    : degree_(degree), affine_(std::move(affine)), monomials_(static_cast<int>(affine_.dim()), degree) {
    for (double s : affine_.scale) {
        if (!(s > 0.0) || !std::isfinite(s)) throw InputError("affine scale factors must be positive");
    }
}

std::vector<double> BasisSpec::evaluate(std::span<const double> x) const {
    if (x.size() != affine_.dim()) {
        throw InputError("point dimension " + std::to_string(x.size()) + " does not match basis dimension " +
                         std::to_string(affine_.dim()));
    }
    const auto z = affine_.apply(x);
    std::vector<double> out(monomials_.size());
    monomials_.evaluate(z, out);
    return out;
}

}  // namespace polyreg
