#include "polyreg/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "polyreg/error.hpp"

namespace polyreg {

MomentAccumulator::MomentAccumulator(int degree, AffineMap affine)
    : degree_(degree),
      affine_(std::move(affine)),
      monomials_(std::make_shared<const MonomialSet>(static_cast<int>(affine_.dim()), 4 * degree)),
      lower_(affine_.dim(), std::numeric_limits<double>::infinity()),
      upper_(affine_.dim(), -std::numeric_limits<double>::infinity()),
      zbuf_(affine_.dim()),
      mbuf_(monomials_->size()),
      mlo_(monomials_->size()) {
    if (degree < 0) throw InputError("polynomial degree must be >= 0");
    first_.resize(3);
    second_.resize(5);
    for (int b = 0; b < 3; ++b) first_[b].resize(firstSize(b));
    for (int c = 0; c < 5; ++c) second_[c].resize(secondSize(c));
}

std::size_t MomentAccumulator::firstSize(int b) const {
    static constexpr int kReach[3] = {2, 1, 0};
    return monomials_->countUpTo(kReach[b] * degree_);
}

std::size_t MomentAccumulator::secondSize(int c) const {
    return monomials_->countUpTo((4 - c) * degree_);
}

void MomentAccumulator::add(std::span<const double> x, double y, double w) {
    if (x.size() != affine_.dim()) {
        throw InputError("point dimension " + std::to_string(x.size()) + " does not match basis dimension " +
                         std::to_string(affine_.dim()));
    }
    affine_.apply(x, zbuf_);
    for (std::size_t k = 0; k < zbuf_.size(); ++k) {
        lower_[k] = std::min(lower_[k], zbuf_[k]);
        upper_[k] = std::max(upper_[k], zbuf_[k]);
    }
    monomials_->evaluate(zbuf_, mbuf_, mlo_);
    ++count_;

    double wy = w;
    for (int b = 0; b < 3; ++b) {
        auto& row = first_[b];
        for (std::size_t i = 0; i < row.size(); ++i) row[i].add(wy * mbuf_[i]);
        wy *= y;
    }
    // w^2 y^c as hi + lo, then exact-product splitting against each monomial.
    double wHi = w * w;
    double wLo = std::fma(w, w, -wHi);
    for (int c = 0; c < 5; ++c) {
        auto& row = second_[c];
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double p = wHi * mbuf_[i];
            row[i].add(p);
            row[i].add(std::fma(wHi, mbuf_[i], -p) + (wHi * mlo_[i] + wLo * mbuf_[i]));
        }
        const double p = wHi * y;
        wLo = std::fma(wHi, y, -p) + wLo * y;
        wHi = p;
    }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.degree_ != degree_ || other.affine_.center != affine_.center ||
        other.affine_.scale != affine_.scale) {
        throw InputError("cannot merge accumulators with different degree or standardization");
    }
    count_ += other.count_;
    for (int b = 0; b < 3; ++b) {
        for (std::size_t i = 0; i < first_[b].size(); ++i) first_[b][i].merge(other.first_[b][i]);
    }
    for (int c = 0; c < 5; ++c) {
        for (std::size_t i = 0; i < second_[c].size(); ++i) second_[c][i].merge(other.second_[c][i]);
    }
    for (std::size_t k = 0; k < lower_.size(); ++k) {
        lower_[k] = std::min(lower_[k], other.lower_[k]);
        upper_[k] = std::max(upper_[k], other.upper_[k]);
    }
}

double MomentAccumulator::first(int b, std::size_t monomial) const { return firstSum(b, monomial).value(); }

const CompensatedSum& MomentAccumulator::firstSum(int b, std::size_t monomial) const {
    return first_.at(static_cast<std::size_t>(b)).at(monomial);
}

double MomentAccumulator::second(int c, std::size_t monomial) const {
    return secondSum(c, monomial).value();
}

const CompensatedSum& MomentAccumulator::secondSum(int c, std::size_t monomial) const {
    return second_.at(static_cast<std::size_t>(c)).at(monomial);
}

MomentAccumulator accumulate(const WeightedSample& sample, const BasisSpec& basis) {
    if (sample.empty()) throw InputError("cannot accumulate an empty sample");
    if (sample.dim() != static_cast<std::size_t>(basis.dim())) {
        throw InputError("sample dimension " + std::to_string(sample.dim()) + " does not match basis dimension " +
                         std::to_string(basis.dim()));
    }
    MomentAccumulator acc(basis.degree(), basis.affine());
    for (std::size_t j = 0; j < sample.size(); ++j) acc.add(sample.x(j), sample.y(j), sample.w(j));
    return acc;
}

namespace {

struct Entry {
    int b;
    std::size_t mono;
};

}  // namespace

bool clipToPsd(Eigen::MatrixXd& cov) {
    cov = 0.5 * (cov + cov.transpose()).eval();
    const double trace = cov.trace();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) return false;
    if (!(eig.eigenvalues().minCoeff() < -1e-10 * std::abs(trace))) return false;
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    cov = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    return true;
}

ParameterVector parameterVector(const MomentAccumulator& acc, int degree) {
    if (degree < 0 || degree > acc.degree()) {
        throw InputError("requested degree " + std::to_string(degree) + " exceeds accumulated degree " +
                         std::to_string(acc.degree()));
    }
    const std::int64_t n = acc.count();
    if (n < 2) throw InsufficientDataError("covariance estimate needs at least 2 points, got " + std::to_string(n));
    const double sumW = acc.sumW();
    if (sumW == 0.0) throw DegenerateWeightsError("sum of weights is zero");

    const MonomialSet& mono = acc.monomials();
    ParameterVector pv;
    pv.degree = degree;
    pv.affine = acc.affine();
    pv.monomials = std::make_shared<const MonomialSet>(acc.dim(), 2 * degree);
    pv.count = n;
    pv.sumW = sumW;
    pv.lower = acc.lower();
    pv.upper = acc.upper();
    pv.nH = mono.countUpTo(degree);
    pv.nG = mono.countUpTo(2 * degree);

    std::vector<Entry> entries;
    entries.reserve(pv.size());
    for (std::size_t k = 0; k < pv.nH; ++k) entries.push_back({1, k});
    for (std::size_t o = 0; o < pv.nG; ++o) entries.push_back({0, o});
    entries.push_back({2, 0});

    // The raw-sum expansion cancels badly when a mean is far from zero
    // relative to its spread, so the contraction runs in quad precision.
    using Quad = __float128;
    auto quad = [](const CompensatedSum& s) { return Quad(s.head()) + Quad(s.tail()); };
    const Quad qSumW = quad(acc.firstSum(0, 0));

    const auto size = static_cast<Eigen::Index>(entries.size());
    std::vector<Quad> qp(entries.size());
    std::vector<Quad> qs(entries.size());
    pv.p.resize(size);
    for (std::size_t m = 0; m < entries.size(); ++m) {
        qp[m] = quad(acc.firstSum(entries[m].b, entries[m].mono)) / qSumW;
        qs[m] = quad(acc.secondSum(entries[m].b, entries[m].mono));
        pv.p(static_cast<Eigen::Index>(m)) = static_cast<double>(qp[m]);
    }

    const Quad qSumW2 = quad(acc.secondSum(0, 0));
    const Quad norm = Quad(static_cast<double>(n)) / (qSumW * qSumW * Quad(static_cast<double>(n - 1)));
    pv.cov.resize(size, size);
    for (std::size_t m1 = 0; m1 < entries.size(); ++m1) {
        const auto& e1 = entries[m1];
        for (std::size_t m2 = m1; m2 < entries.size(); ++m2) {
            const auto& e2 = entries[m2];
            const Quad s12 = quad(acc.secondSum(e1.b + e2.b, mono.productIndex(e1.mono, e2.mono)));
            const double c = static_cast<double>(
                norm * (s12 - qp[m1] * qs[m2] - qp[m2] * qs[m1] + qp[m1] * qp[m2] * qSumW2));
            pv.cov(static_cast<Eigen::Index>(m1), static_cast<Eigen::Index>(m2)) = c;
            pv.cov(static_cast<Eigen::Index>(m2), static_cast<Eigen::Index>(m1)) = c;
        }
    }

    // <1> is exact.
    const auto g0 = static_cast<Eigen::Index>(pv.gIndex(0));
    pv.p(g0) = 1.0;
    pv.cov.row(g0).setZero();
    pv.cov.col(g0).setZero();

    pv.psdClipped = clipToPsd(pv.cov);

    auto squares = std::make_shared<SquaredSums>();
    squares->monomials = acc.sharedMonomials();
    for (int c = 0; c < 3; ++c) {
        const std::size_t len = mono.countUpTo((4 - c) * acc.degree());
        squares->sums[static_cast<std::size_t>(c)].reserve(len);
        for (std::size_t i = 0; i < len; ++i) squares->sums[static_cast<std::size_t>(c)].push_back(acc.secondSum(c, i));
    }
    pv.squares = std::move(squares);
    return pv;
}

ParameterVector parameterVector(const MomentAccumulator& acc) { return parameterVector(acc, acc.degree()); }

}  // namespace polyreg
