#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyreg/moments.hpp"
#include "polyreg/polyfit.hpp"

namespace polyreg {

// Which part of the second-derivative matrix of the cross-validation loss
// is contracted with the input covariance.
enum class BlockMode {
    UpperLeft,  // h-h block only: bias = tr(Ginv Cov(h))
    Full,       // all (h, g) blocks with the 2 / -4 / 6 coefficients
};

std::string blockModeName(BlockMode mode);
BlockMode blockModeFromString(const std::string& s);

struct DegreeReport {
    int degree = 0;
    std::size_t nCoeffs = 0;
    double lossMin = 0.0;
    double bias = 0.0;
    double expectedLoss = 0.0;
    double sigma = 0.0;
    BlockMode approximation = BlockMode::UpperLeft;
    double conditionEstimate = 0.0;
    // The contraction came out negative and was floored at zero.
    bool biasFloored = false;
    // Failed the conditioning guard (or a lower degree did); loss fields unset.
    bool excluded = false;
};

// Expected cross-validation loss of a solved model:
//   E(E+) = lossMin + 1/2 sum_{lm} d2E+/dp_l dp_m Cov(p_l, p_m)
// and its standard deviation sigma = sqrt(2) * bias.
DegreeReport expectedLoss(const PolynomialModel& model, BlockMode mode = BlockMode::UpperLeft);

struct LossDifference {
    double delta = 0.0;
    double sigma = 0.0;
};

// Difference of expected losses B - A; its uncertainty is |sigma_B - sigma_A|.
LossDifference lossDifference(const DegreeReport& a, const DegreeReport& b);

struct SelectConfig {
    int nMax = 1;
    int scanExtra = 2;
    double significance = 0.0;
    BlockMode blockMode = BlockMode::UpperLeft;
    double conditionGuard = kConditionGuard;

    int scanMax() const { return nMax + scanExtra; }
    // Throws InputError on nMax < 0, scanExtra < 1, significance < 0.
    void validate() const;
};

struct Selection {
    int chosen = 0;
    bool escalate = false;
    std::vector<DegreeReport> reports;  // one per scanned degree, ascending
    std::vector<PolynomialModel> models;  // solved models, degrees minDegree..
    int minDegree = 0;

    const PolynomialModel& model(int degree) const;
    const DegreeReport& report(int degree) const;
};

// Scans degrees lo..hi on moments accumulated to at least degree hi and
// picks argmin of expectedLoss + s * sigma. Objectives equal to within
// 1e-12 <y^2> count as ties and go to the lower degree. The first degree
// failing the conditioning guard and everything above it are excluded.
Selection scanDegrees(const ParameterVector& pv, int lo, int hi, double significance,
                      BlockMode mode = BlockMode::UpperLeft, double guard = kConditionGuard);

// scanDegrees over 0..nMax+scanExtra; escalate is set when the chosen
// degree exceeds nMax.
Selection selectDegree(const ParameterVector& pv, const SelectConfig& cfg);

}  // namespace polyreg
