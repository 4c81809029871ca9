#pragma once

#include <cmath>
#include <cstddef>
#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "polyreg/basis.hpp"
#include "polyreg/sample.hpp"

namespace polyreg {

// Neumaier-compensated running sum. Merging adds both the sums and the
// compensation terms.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    void merge(const CompensatedSum& o) noexcept {
        add(o.sum_);
        comp_ += o.comp_;
    }
    double value() const noexcept { return sum_ + comp_; }
    // The unrounded total is head() + tail().
    double head() const noexcept { return sum_; }
    double tail() const noexcept { return comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Raw weighted power sums over a sample, in the standardized coordinates of
// a basis of total degree n:
//
//   first(b, beta)  = sum_j w_j   y_j^b x_j^beta   b in {0,1,2}
//   second(c, beta) = sum_j w_j^2 y_j^c x_j^beta   c in {0,..,4}
//
// The second sums add each product together with its rounding error, so
// head() + tail() of secondSum() is good to about twice double precision.
//
// Every product of two regression inputs y^b1 x^beta1 * y^b2 x^beta2 is
// again of the form y^c x^beta, so these tables hold all the cross sums
// needed for the covariance of the inputs. The exponent ranges are the
// smallest ones that cover the h, g and <y^2> entries of a degree-n fit:
// |beta| <= 2n for first(0), n for first(1), 0 for first(2), and
// |beta| <= (4 - c) n for second(c).
class MomentAccumulator {
public:
    MomentAccumulator(int degree, AffineMap affine);

    void add(std::span<const double> x, double y, double w);
    // Throws InputError unless both accumulators share degree and map.
    void merge(const MomentAccumulator& other);

    int dim() const noexcept { return static_cast<int>(affine_.dim()); }
    int degree() const noexcept { return degree_; }
    const AffineMap& affine() const noexcept { return affine_; }
    std::int64_t count() const noexcept { return count_; }

    // Monomials of degree <= 4n; the tables are indexed by position here.
    const MonomialSet& monomials() const noexcept { return *monomials_; }
    std::shared_ptr<const MonomialSet> sharedMonomials() const noexcept { return monomials_; }

    double first(int b, std::size_t monomial) const;
    const CompensatedSum& firstSum(int b, std::size_t monomial) const;
    double second(int c, std::size_t monomial) const;
    const CompensatedSum& secondSum(int c, std::size_t monomial) const;
    double sumW() const { return first(0, 0); }
    double sumW2() const { return second(0, 0); }

    // Standardized-space bounding box of the accumulated points.
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }

private:
    std::size_t firstSize(int b) const;
    std::size_t secondSize(int c) const;

    int degree_;
    AffineMap affine_;
    std::shared_ptr<const MonomialSet> monomials_;
    std::int64_t count_ = 0;
    std::vector<std::vector<CompensatedSum>> first_;
    std::vector<std::vector<CompensatedSum>> second_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> zbuf_;
    std::vector<double> mbuf_;
    std::vector<double> mlo_;
};

// Accumulates `sample` against the basis degree and affine map.
// Throws InputError on a dimension mismatch or an empty sample.
MomentAccumulator accumulate(const WeightedSample& sample, const BasisSpec& basis);

// sum_j w_j^2 y_j^c x_j^beta for c <= 2, |beta| <= (4 - c) * accumulated
// degree, as compensated sums.
struct SquaredSums {
    std::shared_ptr<const MonomialSet> monomials;
    std::array<std::vector<CompensatedSum>, 3> sums;
};

// Regression inputs of a degree-n polynomial fit and their covariance.
//
// Layout of p: h_k = <y phi_k> for the M monomials of degree <= n, then
// g_o = <x^beta_o> for the K monomials of degree <= 2n, then q = <y^2>.
// The entry g_0 = <1> is exactly 1 with zero variance.
struct ParameterVector {
    int degree = 0;
    AffineMap affine;
    std::shared_ptr<const MonomialSet> monomials;  // degree <= 2n
    std::int64_t count = 0;
    double sumW = 0.0;
    std::size_t nH = 0;
    std::size_t nG = 0;
    Eigen::VectorXd p;
    Eigen::MatrixXd cov;
    // Set when the estimated covariance had an eigenvalue below
    // -1e-10 * trace and was projected onto the PSD cone.
    bool psdClipped = false;
    // Raw second sums, shared with every lower-degree fit on these moments.
    std::shared_ptr<const SquaredSums> squares;
    // Standardized bounding box of the training points.
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t hIndex(std::size_t k) const noexcept { return k; }
    std::size_t gIndex(std::size_t o) const noexcept { return nH + o; }
    std::size_t qIndex() const noexcept { return nH + nG; }
    std::size_t size() const noexcept { return nH + nG + 1; }

    double h(std::size_t k) const { return p(static_cast<Eigen::Index>(hIndex(k))); }
    double g(std::size_t o) const { return p(static_cast<Eigen::Index>(gIndex(o))); }
    double q() const { return p(static_cast<Eigen::Index>(qIndex())); }
};

// Symmetrizes `cov` and, when its smallest eigenvalue is below
// -1e-10 * trace, replaces it by the projection with negative eigenvalues
// set to zero. Returns whether the projection happened.
bool clipToPsd(Eigen::MatrixXd& cov);

// Weighted means and their covariance estimated from the raw sums:
//
//   p_m = first(b_m, beta_m) / sumW
//   Cov(p_1, p_2) = N / (sumW^2 (N - 1))
//       * [S(a1 a2) - p_1 S(a2) - p_2 S(a1) + p_1 p_2 S(1)]
//
// with S(.) = sum_j w_j^2 (.) and a_m = y^b_m x^beta_m per point. N counts
// every point, including those with zero weight.
// Throws InsufficientDataError for N < 2, DegenerateWeightsError for
// sumW == 0.
ParameterVector parameterVector(const MomentAccumulator& acc);

// Same computation restricted to a lower degree d <= acc.degree().
ParameterVector parameterVector(const MomentAccumulator& acc, int degree);

}  // namespace polyreg
