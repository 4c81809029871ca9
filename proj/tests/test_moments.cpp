#include <doctest.h>

#include <cmath>
#include <vector>

#include "polyreg/error.hpp"
#include "polyreg/moments.hpp"
#include "support.hpp"

using namespace polyreg;
using namespace polyreg::testing;

namespace {

// Two-pass weighted covariance of the means of a1 and a2 straight from
// the definition, no raw-sum expansion.
double directCovariance(const WeightedSample& s, const std::function<double(std::size_t)>& a1,
                        const std::function<double(std::size_t)>& a2) {
    const double n = static_cast<double>(s.size());
    double sw = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        sw += s.w(j);
        s1 += s.w(j) * a1(j);
        s2 += s.w(j) * a2(j);
    }
    const double p1 = s1 / sw, p2 = s2 / sw, meanW = sw / n;
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) acc += s.w(j) * s.w(j) * (p1 - a1(j)) * (p2 - a2(j));
    return acc / (meanW * meanW * n * (n - 1.0));
}

BasisSpec identityBasis(int degree, std::size_t dim = 1) { return BasisSpec(degree, AffineMap::identity(dim)); }

}  // namespace

TEST_CASE("accumulate: single zero point") {
    const auto acc = accumulate(sample1d({0.0}, {0.0}), identityBasis(1));
    CHECK(acc.sumW() == 1.0);
    CHECK(acc.first(1, 0) == 0.0);
    CHECK(acc.first(0, 1) == 0.0);
    CHECK(acc.count() == 1);
}

TEST_CASE("accumulate: hand-summed weighted sums") {
    const auto acc = accumulate(sample1d({1.0, 3.0}, {2.0, 4.0}, {0.5, 1.5}), identityBasis(1));
    CHECK(acc.sumW() == doctest::Approx(2.0));
    CHECK(acc.first(1, 0) == doctest::Approx(7.0));
    CHECK(acc.first(1, 1) == doctest::Approx(19.0));
    CHECK(acc.sumW2() == doctest::Approx(0.25 + 2.25));
}

TEST_CASE("accumulate: merge equals union") {
    auto a = accumulate(sample1d({1.0}, {1.0}), identityBasis(1));
    const auto b = accumulate(sample1d({2.0}, {2.0}), identityBasis(1));
    const auto both = accumulate(sample1d({1.0, 2.0}, {1.0, 2.0}), identityBasis(1));
    a.merge(b);
    CHECK(a.count() == 2);
    for (int c = 0; c < 5; ++c) CHECK(a.second(c, 0) == both.second(c, 0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.first(0, i) == both.first(0, i));
    CHECK(a.first(1, 1) == both.first(1, 1));
}

TEST_CASE("accumulate: rejects bad input") {
    WeightedSample s2(2);
    const double x[2] = {0.0, 1.0};
    s2.add(x, 1.0);
    CHECK_THROWS_AS(accumulate(s2, identityBasis(1, 1)), InputError);
    CHECK_THROWS_AS(accumulate(WeightedSample(1), identityBasis(1)), InputError);
    auto a = accumulate(sample1d({1.0}, {1.0}), identityBasis(1));
    const auto b = accumulate(sample1d({1.0}, {1.0}), identityBasis(2));
    CHECK_THROWS_AS(a.merge(b), InputError);
}

TEST_CASE("parameterVector: mean of two unit-weight points reduces to the standard error") {
    const auto pv = parameterVector(accumulate(sample1d({0.0, 0.0}, {0.0, 2.0}), identityBasis(0)));
    CHECK(pv.h(0) == doctest::Approx(1.0));
    CHECK(pv.cov(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("parameterVector: weighted two-point variance") {
    // a = {0, 4}, w = {1, 3}: p = 3, <w> = 2, Var = (1/4) [1*9 + 9*1] / 2.
    const auto s = sample1d({0.0, 0.0}, {0.0, 4.0}, {1.0, 3.0});
    const auto pv = parameterVector(accumulate(s, identityBasis(0)));
    CHECK(pv.h(0) == doctest::Approx(3.0));
    CHECK(pv.cov(0, 0) == doctest::Approx(2.25));

    // Bootstrap of the same two rows: the resampled p takes 0, 3 or 4.
    Rng rng(12345);
    const int reps = 100000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    std::vector<double> vals(reps);
    for (int r = 0; r < reps; ++r) {
        double sw = 0.0, swa = 0.0;
        for (int k = 0; k < 2; ++k) {
            const auto j = rng.below(2);
            sw += s.w(j);
            swa += s.w(j) * s.y(j);
        }
        vals[static_cast<std::size_t>(r)] = swa / sw;
        sum += swa / sw;
    }
    const double mean = sum / reps;
    for (double v : vals) {
        sum2 += (v - mean) * (v - mean);
        sum4 += std::pow(v - mean, 4);
    }
    const double var = sum2 / (reps - 1);
    const double spread = std::sqrt((sum4 / reps - var * var) / reps);
    CHECK(std::abs(var - pv.cov(0, 0)) < 3.0 * spread);
}

TEST_CASE("parameterVector: errors") {
    CHECK_THROWS_AS(parameterVector(accumulate(sample1d({1.0}, {1.0}), identityBasis(1))), InsufficientDataError);
    CHECK_THROWS_AS(parameterVector(accumulate(sample1d({1.0, 2.0}, {1.0, 2.0}, {1.0, -1.0}), identityBasis(1))),
                    DegenerateWeightsError);
    const auto acc = accumulate(sample1d({1.0, 2.0}, {1.0, 2.0}), identityBasis(1));
    CHECK_THROWS_AS(parameterVector(acc, 2), InputError);
}

TEST_CASE("parameterVector: layout and pinned constant moment") {
    Rng rng(7);
    const auto s = randomSample(rng, 50, 2, -1.0, 1.0, [](auto x) { return x[0] - x[1]; }, 0.3, true);
    const auto pv = parameterVector(accumulate(s, BasisSpec(2, AffineMap::standardizing(s))));
    CHECK(pv.nH == 6);
    CHECK(pv.nG == 15);
    CHECK(pv.size() == 22);
    CHECK(pv.g(0) == 1.0);
    CHECK(pv.cov.row(static_cast<Eigen::Index>(pv.gIndex(0))).isZero(0.0));
    CHECK(pv.cov.isApprox(pv.cov.transpose(), 0.0));
    CHECK(pv.cov.diagonal().minCoeff() >= 0.0);
}

TEST_CASE("property: unit weights reproduce the classical variance of the mean") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(999);
        const auto s = randomSample(rng, n, 1, -2.0, 3.0, [](auto x) { return std::sin(3 * x[0]); }, 0.5);
        const auto pv = parameterVector(accumulate(s, identityBasis(1)));
        std::vector<double> ys(n), xs(n), xys(n);
        for (std::size_t j = 0; j < n; ++j) {
            ys[j] = s.y(j);
            xs[j] = s.x(j)[0];
            xys[j] = s.x(j)[0] * s.y(j);
        }
        CHECK(relErr(pv.cov(0, 0), classicalVarianceOfMean(ys)) < 1e-12);
        CHECK(relErr(pv.cov(1, 1), classicalVarianceOfMean(xys)) < 1e-12);
        CHECK(relErr(pv.cov(3, 3), classicalVarianceOfMean(xs)) < 1e-12);
    }
}

TEST_CASE("property: raw-sum covariance matches the two-pass definition for weighted data") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + rng.below(300);
        const auto s = randomSample(rng, n, 1, -1.0, 1.0, [](auto x) { return 1 + x[0] * x[0]; }, 0.2, true);
        const auto pv = parameterVector(accumulate(s, identityBasis(1)));
        auto x = [&](std::size_t j) { return s.x(j)[0]; };
        auto xy = [&](std::size_t j) { return s.x(j)[0] * s.y(j); };
        auto y = [&](std::size_t j) { return s.y(j); };
        auto x2 = [&](std::size_t j) { return s.x(j)[0] * s.x(j)[0]; };
        auto y2 = [&](std::size_t j) { return s.y(j) * s.y(j); };
        CHECK(relErr(pv.cov(0, 1), directCovariance(s, y, xy)) < 1e-10);
        CHECK(relErr(pv.cov(1, 3), directCovariance(s, xy, x)) < 1e-10);
        CHECK(relErr(pv.cov(3, 4), directCovariance(s, x, x2)) < 1e-10);
        CHECK(relErr(pv.cov(5, 0), directCovariance(s, y2, y)) < 1e-10);
    }
}

TEST_CASE("property: merge invariance") {
    Rng rng(5);
    const auto s = randomSample(rng, 400, 2, -1.0, 1.0, [](auto x) { return x[0] * x[1]; }, 0.1, true);
    const BasisSpec basis(2, AffineMap::standardizing(s));
    const auto whole = parameterVector(accumulate(s, basis));

    // Same order, one accumulator fed point by point: identical.
    MomentAccumulator seq(basis.degree(), basis.affine());
    for (std::size_t j = 0; j < s.size(); ++j) seq.add(s.x(j), s.y(j), s.w(j));
    const auto pvSeq = parameterVector(seq);
    CHECK(pvSeq.p == whole.p);
    CHECK(pvSeq.cov == whole.cov);

    // Random merge trees.
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<MomentAccumulator> parts;
        std::size_t j = 0;
        while (j < s.size()) {
            const std::size_t len = 1 + rng.below(60);
            MomentAccumulator a(basis.degree(), basis.affine());
            for (std::size_t k = 0; k < len && j < s.size(); ++k, ++j) a.add(s.x(j), s.y(j), s.w(j));
            parts.push_back(std::move(a));
        }
        while (parts.size() > 1) {
            const std::size_t i = rng.below(parts.size() - 1);
            parts[i].merge(parts[i + 1]);
            parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        }
        const auto pv = parameterVector(parts[0]);
        CHECK(((pv.p - whole.p).cwiseAbs().maxCoeff() / whole.p.cwiseAbs().maxCoeff()) < 1e-13);
        CHECK(((pv.cov - whole.cov).cwiseAbs().maxCoeff() / whole.cov.cwiseAbs().maxCoeff()) < 1e-13);
    }
}

TEST_CASE("property: weight scale invariance") {
    Rng rng(11);
    const auto s = randomSample(rng, 200, 1, -1.0, 1.0, [](auto x) { return x[0]; }, 0.4, true);
    WeightedSample scaled(1);
    for (std::size_t j = 0; j < s.size(); ++j) scaled.add(s.x(j), s.y(j), -3.5 * s.w(j));
    const BasisSpec basis(2, AffineMap::standardizing(s));
    const auto a = parameterVector(accumulate(s, basis));
    const auto b = parameterVector(accumulate(scaled, basis));
    CHECK((a.p - b.p).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-13 * a.cov.cwiseAbs().maxCoeff());
}

TEST_CASE("zero-weight points only change the N(N-1) normalization") {
    Rng rng(3);
    auto s = randomSample(rng, 30, 1, -1.0, 1.0, [](auto x) { return 2 * x[0]; }, 0.2);
    const BasisSpec basis(1, AffineMap::identity(1));
    const auto before = accumulate(s, basis);
    const double x = 0.25;
    s.add(std::span<const double>(&x, 1), 100.0, 0.0);
    const auto after = accumulate(s, basis);
    CHECK(after.count() == before.count() + 1);
    for (int c = 0; c < 5; ++c) CHECK(after.second(c, 0) == before.second(c, 0));
    CHECK(after.first(1, 1) == before.first(1, 1));

    const auto p0 = parameterVector(before);
    const auto p1 = parameterVector(after);
    CHECK(p1.p == p0.p);
    // N/(N-1) goes from 30/29 to 31/30.
    const double ratio = (31.0 / 30.0) / (30.0 / 29.0);
    CHECK(p1.cov.isApprox(p0.cov * ratio, 1e-13));
}

TEST_CASE("clipToPsd projects only clearly negative spectra") {
    Eigen::MatrixXd ok(2, 2);
    ok << 2.0, 1.0, 1.0, 2.0;
    Eigen::MatrixXd copy = ok;
    CHECK_FALSE(clipToPsd(copy));
    CHECK(copy == ok);

    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
    CHECK(clipToPsd(bad));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(bad);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    CHECK(bad(0, 0) == doctest::Approx(1.5));
}
