#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "polyreg/basis.hpp"
#include "polyreg/moments.hpp"
#include "polyreg/sample.hpp"

namespace polyreg {

// Gram systems whose equilibrated 1-norm condition estimate exceeds this
// are rejected by solveAmplitudes.
inline constexpr double kConditionGuard = 1e12;

// Normal equations of the least-squares fit, G f = h, in standardized
// coordinates, together with the covariance of the stacked (h, g) inputs.
struct GramSystem {
    BasisSpec basis;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    double ySquared = 0.0;
    // Rows/cols 0..nH-1 are h, nH..nH+nG-1 are the distinct g moments.
    Eigen::MatrixXd pcov;
    std::size_t nH = 0;
    std::size_t nG = 0;
    // gramMoment[i * nH + l] is the index o of the moment g_o in cell (i, l).
    std::vector<std::size_t> gramMoment;
    double conditionEstimate = 0.0;
    bool psdClipped = false;
    std::int64_t count = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    double sumW = 0.0;
    std::shared_ptr<const SquaredSums> squares;
};

// Throws InputError when pv lacks moments the basis needs.
GramSystem buildGram(const ParameterVector& pv, const BasisSpec& basis);

struct FitDiagnostics {
    double conditionEstimate = 0.0;
    bool psdClipped = false;
};

// Amplitude covariance in factored form, Cov(f) = R^-1 B R^-T with
// G = R^T R. A band evaluates u = R^-T phi and u^T B u; the explicit
// covariance of a high-degree fit has entries many orders above the band
// and loses it to cancellation.
struct CovarianceFactor {
    Eigen::MatrixXd r;  // upper triangular
    Eigen::MatrixXd b;  // symmetric

    static CovarianceFactor zero(std::size_t size);
    Eigen::MatrixXd covariance() const;
    double variance(const Eigen::VectorXd& phi) const;
};

struct PolynomialModel {
    BasisSpec basis;
    Eigen::VectorXd coeffs;
    // covFactor.covariance(), kept for reporting.
    Eigen::MatrixXd coeffCov;
    GramSystem gram;
    Eigen::MatrixXd gramInverse;
    // <y^2> - h^T f, the mean squared residual on the training sample.
    double lossMin = 0.0;
    FitDiagnostics diagnostics;
    CovarianceFactor covFactor;
};

// Throws ConditioningError when the Gram condition estimate exceeds `guard`.
PolynomialModel solveAmplitudes(const GramSystem& gs, double guard = kConditionGuard);

// df_i/dh_l = Ginv_il and df_i/dg_o = -(Ginv D_o f)_i, where D_o is the 0/1
// indicator of the Gram cells holding g_o. The column of g_0 = <1> is zero
// since that moment is pinned to 1.
struct CoefficientDerivatives {
    Eigen::MatrixXd dfdh;  // nH x nH
    Eigen::MatrixXd dfdg;  // nH x nG

    // [dfdh | dfdg], the Jacobian against the stacked (h, g) inputs.
    Eigen::MatrixXd jacobian() const;
};

CoefficientDerivatives coefficientDerivatives(const PolynomialModel& model);

// J Cov(h, g) J^T straight from the input covariance. Equal to coeffCov in
// exact arithmetic; in floating point it is only usable for well-conditioned
// fits, because the h and g terms cancel whenever the residuals are small.
Eigen::MatrixXd deltaMethodCovariance(const PolynomialModel& model);

// Residual-weighted Gram matrix
//   A_il = N / (sumW^2 (N - 1)) sum_j w_j^2 r_j^2 phi_i(x_j) phi_l(x_j),
// r_j = y_j - f.phi(x_j), expanded over the raw second sums and contracted
// in quadruple precision. Cov(f) = Ginv A Ginv.
Eigen::MatrixXd residualGram(const GramSystem& gs, const Eigen::VectorXd& coeffs);

struct Prediction {
    double value = 0.0;
    double variance = 0.0;
    // The point lies outside the bounding box of the training data.
    bool extrapolated = false;
};

Prediction predict(const PolynomialModel& model, std::span<const double> x);

// Prediction shared with deserialized models, which keep only the
// coefficients and the covariance factor.
Prediction predictFromCoefficients(const BasisSpec& basis, const Eigen::VectorXd& coeffs,
                                   const CovarianceFactor& factor, std::span<const double> x);

// Coefficients of the same polynomial in raw (unstandardized) monomials,
// ordered like basis.monomials().
Eigen::VectorXd physicalCoefficients(const BasisSpec& basis, const Eigen::VectorXd& coeffs);

// accumulate -> parameterVector -> buildGram -> solveAmplitudes.
PolynomialModel fitPolynomial(const WeightedSample& sample, const BasisSpec& basis,
                              double guard = kConditionGuard);

// Same with a standardizing affine map computed from the sample.
PolynomialModel fitPolynomial(const WeightedSample& sample, int degree, double guard = kConditionGuard);

// Mean squared residual of arbitrary coefficients against the moments,
// <y^2> - 2 f.h + f^T G f.
double lossAt(const GramSystem& gs, const Eigen::VectorXd& coeffs);

}  // namespace polyreg
