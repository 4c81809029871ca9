#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyreg/basis.hpp"
#include "polyreg/polyfit.hpp"
#include "polyreg/sample.hpp"

namespace polyreg {

struct BootstrapReport {
    int replicas = 0;
    int dropped = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd meanCoeffs;
    Eigen::MatrixXd empiricalCoeffCov;
    // Empirical standard deviation of F(x) at each supplied point.
    std::vector<double> bandAtPoints;
};

// Plain nonparametric bootstrap: R resamples of the (x, y, w) rows with
// replacement, each refitted in the fixed basis (same standardization), so
// coefficients are comparable across replicas. Replica r draws from
// Rng(seed, r); the report does not depend on `threads`.
// Throws InputError for N < 10 or R < 100, NumericalError when more than
// 20% of the replicas have a singular Gram matrix.
BootstrapReport bootstrapFit(const WeightedSample& sample, const BasisSpec& basis, int replicas,
                             std::uint64_t seed, std::span<const std::vector<double>> points = {},
                             int threads = 1);

// Least squares straight from the point list: sum_j w_j phi phi^T f =
// sum_j w_j y_j phi, with monomials evaluated by std::pow and a full-pivot
// LU solve.
Eigen::VectorXd normalEquationsFit(const WeightedSample& sample, const BasisSpec& basis);

// Straight-line fit a + b x with known per-point sigma_y.
struct KnownSigmaReport {
    double c = 0.0;  // sum sigma^-2
    double g0 = 1.0;
    double g1 = 0.0;
    double g2 = 0.0;
    double h0 = 0.0;
    double h1 = 0.0;
    Eigen::Matrix2d G;
    Eigen::Vector2d coeffs;
    // Weighted least-squares covariance (1/c) G^-1.
    Eigen::Matrix2d covariance;
    // [[g0, g1], [g1, g2]], the covariance as it is often quoted without
    // the 1/c factor and the inversion; kept for side-by-side display.
    Eigen::Matrix2d printedCovariance;
};

// Throws InputError unless every sigma is positive and sizes agree.
KnownSigmaReport knownSigmaCovariance(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> sigma);

struct FiniteDifferenceReport {
    bool skipped = false;
    std::string note;
    double maxRelativeError = 0.0;
    // Central-difference Jacobian against (h, g), same layout as
    // CoefficientDerivatives::jacobian().
    Eigen::MatrixXd numeric;
};

// Central differences of the amplitudes with respect to every h_l and
// every g_o except the pinned g_0, step relStep times the moment's scale.
// The error is normwise over the Jacobian with each column scaled by its
// step scale. Models with condition estimate >= maxCondition are skipped.
FiniteDifferenceReport finiteDifferenceCheck(const PolynomialModel& model, double relStep = 1e-6,
                                             double maxCondition = 1e8);

}  // namespace polyreg
