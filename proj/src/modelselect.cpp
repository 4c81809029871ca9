#include "polyreg/modelselect.hpp"

#include <cmath>
#include <limits>

#include "polyreg/error.hpp"

namespace polyreg {

std::string blockModeName(BlockMode mode) { return mode == BlockMode::Full ? "full" : "upper-left"; }

BlockMode blockModeFromString(const std::string& s) {
    if (s == "upper-left") return BlockMode::UpperLeft;
    if (s == "full") return BlockMode::Full;
    throw InputError("unknown block mode '" + s + "' (expected upper-left or full)");
}

DegreeReport expectedLoss(const PolynomialModel& model, BlockMode mode) {
    const GramSystem& gs = model.gram;
    const auto m = static_cast<Eigen::Index>(gs.nH);
    const auto k = static_cast<Eigen::Index>(gs.nG);
    const Eigen::MatrixXd& ginv = model.gramInverse;

    DegreeReport r;
    r.degree = model.basis.degree();
    r.nCoeffs = gs.nH;
    r.lossMin = model.lossMin;
    r.approximation = mode;
    r.conditionEstimate = model.diagnostics.conditionEstimate;

    const auto covH = gs.pcov.topLeftCorner(m, m);
    double bias = 0.5 * (2.0 * ginv).cwiseProduct(covH).sum();
    if (mode == BlockMode::Full) {
        Eigen::MatrixXd df = Eigen::MatrixXd::Zero(m, k);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index l = 0; l < m; ++l) {
                df(i, static_cast<Eigen::Index>(gs.gramMoment[static_cast<std::size_t>(i * m + l)])) +=
                    model.coeffs(l);
            }
        }
        const Eigen::MatrixXd ginvDf = ginv * df;
        const Eigen::MatrixXd hg = -4.0 * ginvDf;
        const Eigen::MatrixXd gg = 6.0 * df.transpose() * ginvDf;
        const auto covHG = gs.pcov.topRightCorner(m, k);
        const auto covGG = gs.pcov.bottomRightCorner(k, k);
        bias += 0.5 * (2.0 * hg.cwiseProduct(covHG).sum() + gg.cwiseProduct(covGG).sum());
    }
    if (!(bias >= 0.0)) {
        r.biasFloored = true;
        bias = 0.0;
    }
    r.bias = bias;
    r.expectedLoss = r.lossMin + bias;
    r.sigma = std::sqrt(2.0) * bias;
    return r;
}

LossDifference lossDifference(const DegreeReport& a, const DegreeReport& b) {
    return {b.expectedLoss - a.expectedLoss, std::abs(b.sigma - a.sigma)};
}

void SelectConfig::validate() const {
    if (nMax < 0) throw InputError("nMax must be >= 0");
    if (scanExtra < 1) throw InputError("scanExtra must be >= 1");
    if (!(significance >= 0.0)) throw InputError("significance must be >= 0");
}

const PolynomialModel& Selection::model(int degree) const {
    return models.at(static_cast<std::size_t>(degree - minDegree));
}

const DegreeReport& Selection::report(int degree) const {
    return reports.at(static_cast<std::size_t>(degree - minDegree));
}

Selection scanDegrees(const ParameterVector& pv, int lo, int hi, double significance, BlockMode mode,
                      double guard) {
    if (lo < 0 || hi < lo) throw InputError("invalid degree range");
    if (hi > pv.degree) {
        throw InputError("scan up to degree " + std::to_string(hi) + " needs moments of degree " +
                         std::to_string(2 * hi));
    }
    Selection sel;
    sel.minDegree = lo;
    bool failed = false;
    for (int d = lo; d <= hi; ++d) {
        if (!failed) {
            try {
                const BasisSpec basis(d, pv.affine);
                sel.models.push_back(solveAmplitudes(buildGram(pv, basis), guard));
                sel.reports.push_back(expectedLoss(sel.models.back(), mode));
                continue;
            } catch (const ConditioningError& e) {
                failed = true;
                DegreeReport r;
                r.degree = d;
                r.nCoeffs = static_cast<std::size_t>(basisSize(static_cast<int>(pv.affine.dim()), d));
                r.approximation = mode;
                r.conditionEstimate = e.conditionEstimate();
                r.excluded = true;
                sel.reports.push_back(r);
                continue;
            }
        }
        DegreeReport r;
        r.degree = d;
        r.nCoeffs = static_cast<std::size_t>(basisSize(static_cast<int>(pv.affine.dim()), d));
        r.approximation = mode;
        r.conditionEstimate = std::numeric_limits<double>::quiet_NaN();
        r.excluded = true;
        sel.reports.push_back(r);
    }
    if (sel.models.empty()) {
        throw ConditioningError("every scanned degree failed the conditioning guard",
                                sel.reports.front().conditionEstimate);
    }

    const double tol = 1e-12 * std::max(std::abs(pv.q()), std::numeric_limits<double>::min());
    double best = std::numeric_limits<double>::infinity();
    sel.chosen = lo;
    for (const auto& r : sel.reports) {
        if (r.excluded) break;
        const double objective = r.expectedLoss + significance * r.sigma;
        if (objective < best - tol) {
            best = objective;
            sel.chosen = r.degree;
        }
    }
    return sel;
}

Selection selectDegree(const ParameterVector& pv, const SelectConfig& cfg) {
    cfg.validate();
    Selection sel = scanDegrees(pv, 0, cfg.scanMax(), cfg.significance, cfg.blockMode, cfg.conditionGuard);
    sel.escalate = sel.chosen > cfg.nMax;
    return sel;
}

}  // namespace polyreg
