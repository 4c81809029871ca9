#include "polyreg/polyfit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "polyreg/error.hpp"
#include "polyreg/linalg.hpp"

namespace polyreg {

GramSystem buildGram(const ParameterVector& pv, const BasisSpec& basis) {
    if (basis.dim() != static_cast<int>(pv.affine.dim())) {
        throw InputError("basis dimension does not match the parameter vector");
    }
    if (basis.degree() > pv.degree) {
        throw InputError("basis degree " + std::to_string(basis.degree()) +
                         " needs moments beyond the accumulated degree " + std::to_string(pv.degree));
    }
    if (basis.affine().center != pv.affine.center || basis.affine().scale != pv.affine.scale) {
        throw InputError("basis standardization differs from the accumulated one");
    }

    const std::size_t nH = basis.size();
    const std::size_t nG = pv.monomials->countUpTo(2 * basis.degree());
    const auto m = static_cast<Eigen::Index>(nH);

    GramSystem gs{basis, {}, {}, pv.q(), {}, nH, nG, {}, 0.0, pv.psdClipped, pv.count, pv.lower, pv.upper};
    gs.G.resize(m, m);
    gs.h.resize(m);
    gs.gramMoment.resize(nH * nH);
    for (std::size_t i = 0; i < nH; ++i) {
        gs.h(static_cast<Eigen::Index>(i)) = pv.h(i);
        for (std::size_t l = 0; l < nH; ++l) {
            const std::size_t o = pv.monomials->productIndex(i, l);
            gs.gramMoment[i * nH + l] = o;
            gs.G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = pv.g(o);
        }
    }

    std::vector<Eigen::Index> idx;
    idx.reserve(nH + nG);
    for (std::size_t k = 0; k < nH; ++k) idx.push_back(static_cast<Eigen::Index>(pv.hIndex(k)));
    for (std::size_t o = 0; o < nG; ++o) idx.push_back(static_cast<Eigen::Index>(pv.gIndex(o)));
    gs.pcov = pv.cov(idx, idx);
    gs.sumW = pv.sumW;
    gs.squares = pv.squares;

    gs.conditionEstimate = SymmetricSolver(gs.G).conditionEstimate();
    return gs;
}

namespace {
CovarianceFactor factorCovariance(const GramSystem& gs, const Eigen::VectorXd& coeffs);
}  // namespace

PolynomialModel solveAmplitudes(const GramSystem& gs, double guard) {
    SymmetricSolver solver(gs.G);
    const double cond = solver.conditionEstimate();
    if (!solver.ok() || !(cond <= guard)) {
        std::ostringstream msg;
        msg << "Gram matrix of degree " << gs.basis.degree() << " is ill-conditioned (estimate " << cond
            << ", guard " << guard << ")";
        throw ConditioningError(msg.str(), cond);
    }
    PolynomialModel model{gs.basis, solver.solve(gs.h), {}, gs, solver.inverse(), 0.0, {cond, gs.psdClipped}};
    model.gram.conditionEstimate = cond;
    model.lossMin = gs.ySquared - gs.h.dot(model.coeffs);

    model.covFactor = factorCovariance(gs, model.coeffs);
    model.coeffCov = model.covFactor.covariance();
    return model;
}

Eigen::MatrixXd deltaMethodCovariance(const PolynomialModel& model) {
    const Eigen::MatrixXd jac = coefficientDerivatives(model).jacobian();
    Eigen::MatrixXd c = jac * model.gram.pcov * jac.transpose();
    return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd residualGram(const GramSystem& gs, const Eigen::VectorXd& coeffs) {
    if (!gs.squares) throw InputError("Gram system carries no second sums");
    using Quad = __float128;
    const MonomialSet& mono = *gs.squares->monomials;
    const auto& sums = gs.squares->sums;
    auto sum = [&](int c, std::size_t i) {
        const CompensatedSum& s = sums[static_cast<std::size_t>(c)][i];
        return Quad(s.head()) + Quad(s.tail());
    };
    const int n = gs.basis.degree();
    const std::size_t m = gs.nH;

    // r^2 = y^2 - 2 y f.phi + (f.phi)^2, summed against x^gamma for |gamma| <= 2n.
    std::vector<Quad> ff(mono.countUpTo(3 * n));
    for (std::size_t d = 0; d < ff.size(); ++d) {
        Quad a = 0;
        for (std::size_t k = 0; k < m; ++k) a += Quad(coeffs(static_cast<Eigen::Index>(k))) * sum(0, mono.productIndex(d, k));
        ff[d] = a;
    }
    std::vector<double> t(mono.countUpTo(2 * n));
    for (std::size_t g = 0; g < t.size(); ++g) {
        Quad a = sum(2, g);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = mono.productIndex(g, k);
            a += Quad(coeffs(static_cast<Eigen::Index>(k))) * (ff[i] - 2 * sum(1, i));
        }
        t[g] = static_cast<double>(a);
    }

    const double nn = static_cast<double>(gs.count);
    const double norm = nn / (gs.sumW * gs.sumW * (nn - 1.0));
    Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < m; ++l) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = norm * t[gs.gramMoment[i * m + l]];
        }
    }
    return a;
}

CovarianceFactor CovarianceFactor::zero(std::size_t size) {
    const auto n = static_cast<Eigen::Index>(size);
    return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, n)};
}

Eigen::MatrixXd CovarianceFactor::covariance() const {
    const auto rt = r.triangularView<Eigen::Upper>();
    const Eigen::MatrixXd y = rt.solve(b);
    Eigen::MatrixXd c = rt.solve(y.transpose());
    return 0.5 * (c + c.transpose());
}

double CovarianceFactor::variance(const Eigen::VectorXd& phi) const {
    const Eigen::VectorXd u = r.transpose().triangularView<Eigen::Lower>().solve(phi);
    return std::max(0.0, u.dot(b * u));
}

namespace {

CovarianceFactor factorCovariance(const GramSystem& gs, const Eigen::VectorXd& coeffs) {
    // Cholesky of the Jacobi-equilibrated Gram matrix, scaled back: G = R^T R.
    const Eigen::VectorXd d = gs.G.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::LLT<Eigen::MatrixXd> llt(d.asDiagonal() * gs.G * d.asDiagonal());
    CovarianceFactor f;
    if (llt.info() != Eigen::Success) {
        // Only reachable with the guard switched off; the explicit form is
        // the best available.
        const Eigen::MatrixXd ginv = SymmetricSolver(gs.G).inverse();
        const auto n = gs.G.rows();
        f.r = Eigen::MatrixXd::Identity(n, n);
        f.b = ginv * residualGram(gs, coeffs) * ginv;
        f.b = 0.5 * (f.b + f.b.transpose()).eval();
        return f;
    }
    f.r = Eigen::MatrixXd(llt.matrixU()) * d.cwiseInverse().asDiagonal();
    const auto rt = f.r.transpose().triangularView<Eigen::Lower>();
    const Eigen::MatrixXd x = rt.solve(residualGram(gs, coeffs));
    f.b = rt.solve(x.transpose());
    f.b = 0.5 * (f.b + f.b.transpose()).eval();
    return f;
}

}  // namespace

Eigen::MatrixXd CoefficientDerivatives::jacobian() const {
    Eigen::MatrixXd j(dfdh.rows(), dfdh.cols() + dfdg.cols());
    j << dfdh, dfdg;
    return j;
}

CoefficientDerivatives coefficientDerivatives(const PolynomialModel& model) {
    const GramSystem& gs = model.gram;
    const auto m = static_cast<Eigen::Index>(gs.nH);
    CoefficientDerivatives d;
    d.dfdh = model.gramInverse;
    // (D_o f)_i = sum over cells (i, l) holding g_o of f_l; collect all o at once.
    Eigen::MatrixXd df = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(gs.nG));
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index l = 0; l < m; ++l) {
            const auto o = static_cast<Eigen::Index>(gs.gramMoment[static_cast<std::size_t>(i * m + l)]);
            df(i, o) += model.coeffs(l);
        }
    }
    d.dfdg = -model.gramInverse * df;
    d.dfdg.col(0).setZero();
    return d;
}

Prediction predictFromCoefficients(const BasisSpec& basis, const Eigen::VectorXd& coeffs,
                                   const CovarianceFactor& factor, std::span<const double> x) {
    const auto phi = basis.evaluate(x);
    const Eigen::Map<const Eigen::VectorXd> v(phi.data(), static_cast<Eigen::Index>(phi.size()));
    Prediction out;
    out.value = v.dot(coeffs);
    out.variance = factor.variance(v);
    return out;
}

Prediction predict(const PolynomialModel& model, std::span<const double> x) {
    Prediction out = predictFromCoefficients(model.basis, model.coeffs, model.covFactor, x);
    const auto z = model.basis.affine().apply(x);
    const auto& lo = model.gram.lower;
    const auto& hi = model.gram.upper;
    for (std::size_t k = 0; k < z.size() && k < lo.size(); ++k) {
        if (z[k] < lo[k] || z[k] > hi[k]) out.extrapolated = true;
    }
    return out;
}

Eigen::VectorXd physicalCoefficients(const BasisSpec& basis, const Eigen::VectorXd& coeffs) {
    const MonomialSet& mono = basis.monomials();
    const auto& aff = basis.affine();
    const std::size_t dim = aff.dim();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mono.size()));

    // prod_k (s_k (x_k - mu_k))^a_k = prod_k s_k^a_k sum_j C(a_k, j) x_k^j (-mu_k)^(a_k - j)
    for (std::size_t i = 0; i < mono.size(); ++i) {
        const Exponent& a = mono.exponent(i);
        std::vector<std::pair<Exponent, double>> terms{{Exponent(dim, 0), coeffs(static_cast<Eigen::Index>(i))}};
        for (std::size_t k = 0; k < dim; ++k) {
            const int ak = a[k];
            std::vector<std::pair<Exponent, double>> next;
            next.reserve(terms.size() * static_cast<std::size_t>(ak + 1));
            double binom = 1.0;
            for (int j = 0; j <= ak; ++j) {
                const double factor =
                    std::pow(aff.scale[k], ak) * binom * std::pow(-aff.center[k], ak - j);
                for (const auto& [e, c] : terms) {
                    Exponent ne = e;
                    ne[k] = j;
                    next.emplace_back(std::move(ne), c * factor);
                }
                binom = binom * (ak - j) / (j + 1);
            }
            terms = std::move(next);
        }
        for (const auto& [e, c] : terms) out(static_cast<Eigen::Index>(mono.indexOf(e))) += c;
    }
    return out;
}

PolynomialModel fitPolynomial(const WeightedSample& sample, const BasisSpec& basis, double guard) {
    const auto acc = accumulate(sample, basis);
    const auto pv = parameterVector(acc);
    return solveAmplitudes(buildGram(pv, basis), guard);
}

PolynomialModel fitPolynomial(const WeightedSample& sample, int degree, double guard) {
    return fitPolynomial(sample, BasisSpec(degree, AffineMap::standardizing(sample)), guard);
}

double lossAt(const GramSystem& gs, const Eigen::VectorXd& coeffs) {
    return gs.ySquared - 2.0 * coeffs.dot(gs.h) + coeffs.dot(gs.G * coeffs);
}

}  // namespace polyreg
