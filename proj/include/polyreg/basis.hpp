#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "polyreg/sample.hpp"

namespace polyreg {

using Exponent = std::vector<int>;

// Number of monomials in `dim` variables with total degree <= degree,
// i.e. binomial(degree + dim, dim). Throws InputError when the result does
// not fit into a signed 64-bit integer.
std::int64_t basisSize(int dim, int degree);

// All monomials of total degree <= maxDegree in graded lexicographic order:
// degree-major, and within a degree the exponent tuples descend
// lexicographically (1, x, y, x^2, xy, y^2 for two variables). Every
// lower-degree set is a prefix of a higher-degree one.
class MonomialSet {
public:
    MonomialSet(int dim, int maxDegree);

    int dim() const noexcept { return dim_; }
    int maxDegree() const noexcept { return maxDegree_; }
    std::size_t size() const noexcept { return exps_.size(); }

    // Length of the prefix holding the monomials of degree <= d.
    std::size_t countUpTo(int d) const;

    const Exponent& exponent(std::size_t i) const { return exps_[i]; }
    int degreeOf(std::size_t i) const { return degrees_[i]; }

    // Index of an exponent tuple; throws InputError when absent.
    std::size_t indexOf(std::span<const int> e) const;

    // Index of exponent(i) + exponent(j).
    std::size_t productIndex(std::size_t i, std::size_t j) const;

    // Values of every monomial at `x` (already standardized). `out` must
    // have size() entries.
    void evaluate(std::span<const double> x, std::span<double> out) const;

    // Same values as unevaluated sums hi + lo carrying the rounding error of
    // every product.
    void evaluate(std::span<const double> x, std::span<double> hi, std::span<double> lo) const;

private:
    int dim_;
    int maxDegree_;
    std::vector<Exponent> exps_;
    std::vector<int> degrees_;
    std::vector<std::size_t> parent_;  // monomial / x_axis
    std::vector<int> axis_;
    std::map<Exponent, std::size_t> lookup_;
};

// Per-axis standardization x -> scale * (x - center).
struct AffineMap {
    std::vector<double> center;
    std::vector<double> scale;

    static AffineMap identity(std::size_t dim);
    // Zero (unweighted) mean and unit half-range per axis. Axes without
    // spread keep scale 1.
    static AffineMap standardizing(const WeightedSample& sample);

    std::size_t dim() const noexcept { return center.size(); }
    void apply(std::span<const double> x, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> x) const;
};

// Polynomial basis of a given total degree over standardized inputs.
class BasisSpec {
public:
    BasisSpec(int degree, AffineMap affine);

    int dim() const noexcept { return static_cast<int>(affine_.dim()); }
    int degree() const noexcept { return degree_; }
    std::size_t size() const noexcept { return monomials_.size(); }
    const MonomialSet& monomials() const noexcept { return monomials_; }
    const AffineMap& affine() const noexcept { return affine_; }

    // Basis function values phi_k(S(x - mu)) at a physical point.
    std::vector<double> evaluate(std::span<const double> x) const;

    BasisSpec withDegree(int degree) const { return BasisSpec(degree, affine_); }

private:
    int degree_;
    AffineMap affine_;
    MonomialSet monomials_;
};

}  // namespace polyreg
