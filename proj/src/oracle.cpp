#include "polyreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <thread>

#include "polyreg/error.hpp"
#include "polyreg/linalg.hpp"
#include "polyreg/random.hpp"

namespace polyreg {

namespace {

struct Replica {
    bool ok = false;
    Eigen::VectorXd coeffs;
    std::vector<double> values;
};

Replica runReplica(const WeightedSample& sample, const BasisSpec& basis, std::uint64_t seed, int r,
                   std::span<const std::vector<double>> points) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    const std::size_t n = sample.size();
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
    Replica out;
    try {
        const PolynomialModel m = fitPolynomial(sample.select(idx), basis);
        out.coeffs = m.coeffs;
        out.values.reserve(points.size());
        for (const auto& x : points) {
            out.values.push_back(predictFromCoefficients(basis, m.coeffs, m.covFactor, x).value);
        }
        out.ok = true;
    } catch (const NumericalError&) {
    }
    return out;
}

}  // namespace

BootstrapReport bootstrapFit(const WeightedSample& sample, const BasisSpec& basis, int replicas,
                             std::uint64_t seed, std::span<const std::vector<double>> points, int threads) {
    if (sample.size() < 10) throw InputError("bootstrap needs at least 10 points");
    if (replicas < 100) throw InputError("bootstrap needs at least 100 replicas");

    std::vector<Replica> results(static_cast<std::size_t>(replicas));
    const int nThreads = std::max(1, std::min(threads, replicas));
    if (nThreads == 1) {
        for (int r = 0; r < replicas; ++r) results[static_cast<std::size_t>(r)] = runReplica(sample, basis, seed, r, points);
    } else {
        std::vector<std::future<void>> jobs;
        for (int t = 0; t < nThreads; ++t) {
            jobs.push_back(std::async(std::launch::async, [&, t] {
                for (int r = t; r < replicas; r += nThreads) {
                    results[static_cast<std::size_t>(r)] = runReplica(sample, basis, seed, r, points);
                }
            }));
        }
        for (auto& j : jobs) j.get();
    }

    BootstrapReport rep;
    rep.replicas = replicas;
    rep.seed = seed;
    const auto m = static_cast<Eigen::Index>(basis.size());
    rep.meanCoeffs = Eigen::VectorXd::Zero(m);
    std::vector<double> meanValues(points.size(), 0.0);
    int good = 0;
    for (const auto& r : results) {
        if (!r.ok) {
            ++rep.dropped;
            continue;
        }
        ++good;
        rep.meanCoeffs += r.coeffs;
        for (std::size_t i = 0; i < points.size(); ++i) meanValues[i] += r.values[i];
    }
    if (rep.dropped * 5 > replicas) {
        throw NumericalError("bootstrap dropped " + std::to_string(rep.dropped) + " of " +
                             std::to_string(replicas) + " replicas with singular Gram matrices");
    }
    rep.meanCoeffs /= good;
    for (auto& v : meanValues) v /= good;

    rep.empiricalCoeffCov = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> var(points.size(), 0.0);
    for (const auto& r : results) {
        if (!r.ok) continue;
        const Eigen::VectorXd d = r.coeffs - rep.meanCoeffs;
        rep.empiricalCoeffCov += d * d.transpose();
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double dv = r.values[i] - meanValues[i];
            var[i] += dv * dv;
        }
    }
    rep.empiricalCoeffCov /= (good - 1);
    rep.bandAtPoints.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) rep.bandAtPoints[i] = std::sqrt(var[i] / (good - 1));
    return rep;
}

Eigen::VectorXd normalEquationsFit(const WeightedSample& sample, const BasisSpec& basis) {
    const auto m = static_cast<Eigen::Index>(basis.size());
    const MonomialSet& mono = basis.monomials();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd phi(m);
    for (std::size_t j = 0; j < sample.size(); ++j) {
        const auto z = basis.affine().apply(sample.x(j));
        for (Eigen::Index i = 0; i < m; ++i) {
            double v = 1.0;
            const auto& e = mono.exponent(static_cast<std::size_t>(i));
            for (std::size_t k = 0; k < z.size(); ++k) v *= std::pow(z[k], e[k]);
            phi(i) = v;
        }
        a.noalias() += sample.w(j) * phi * phi.transpose();
        b += sample.w(j) * sample.y(j) * phi;
    }
    return a.fullPivLu().solve(b);
}

KnownSigmaReport knownSigmaCovariance(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> sigma) {
    if (x.size() != y.size() || x.size() != sigma.size()) throw InputError("x, y and sigma sizes differ");
    if (x.empty()) throw InputError("known-sigma fit needs data");
    KnownSigmaReport r;
    double sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(sigma[j] > 0.0)) throw InputError("sigma_y must be positive");
        const double w = 1.0 / (sigma[j] * sigma[j]);
        r.c += w;
        sx += w * x[j];
        sxx += w * x[j] * x[j];
        sy += w * y[j];
        sxy += w * x[j] * y[j];
    }
    r.g0 = 1.0;
    r.g1 = sx / r.c;
    r.g2 = sxx / r.c;
    r.h0 = sy / r.c;
    r.h1 = sxy / r.c;
    r.G << r.g0, r.g1, r.g1, r.g2;
    const Eigen::Matrix2d ginv = r.G.inverse();
    r.coeffs = ginv * Eigen::Vector2d(r.h0, r.h1);
    r.covariance = ginv / r.c;
    r.printedCovariance = r.G;
    return r;
}

FiniteDifferenceReport finiteDifferenceCheck(const PolynomialModel& model, double relStep, double maxCondition) {
    FiniteDifferenceReport rep;
    const GramSystem& gs = model.gram;
    if (!(model.diagnostics.conditionEstimate < maxCondition)) {
        rep.skipped = true;
        rep.note = "skipped: condition estimate " + std::to_string(model.diagnostics.conditionEstimate) +
                   " exceeds " + std::to_string(maxCondition);
        return rep;
    }
    const auto m = static_cast<Eigen::Index>(gs.nH);
    const auto k = static_cast<Eigen::Index>(gs.nG);
    const Eigen::MatrixXd analytic = coefficientDerivatives(model).jacobian();
    rep.numeric = Eigen::MatrixXd::Zero(m, m + k);
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(m + k);

    auto solve = [](const Eigen::MatrixXd& g, const Eigen::VectorXd& h) { return SymmetricSolver(g).solve(h); };

    // Central difference with exactly representable offsets.
    auto central = [&](double p, double s, auto&& eval) {
        const double step = relStep * s;
        const double up = p + step;
        const double dn = p - step;
        const Eigen::VectorXd fu = eval(up);
        const Eigen::VectorXd fd = eval(dn);
        return Eigen::VectorXd((fu - fd) / ((up - p) + (p - dn)));
    };

    for (Eigen::Index l = 0; l < m; ++l) {
        const double s = std::max(std::abs(gs.h(l)), std::sqrt(std::abs(gs.ySquared * gs.G(l, l))));
        scale(l) = s > 0.0 ? s : 1.0;
        rep.numeric.col(l) = central(gs.h(l), scale(l), [&](double v) {
            Eigen::VectorXd h = gs.h;
            h(l) = v;
            return solve(gs.G, h);
        });
    }
    for (Eigen::Index o = 1; o < k; ++o) {
        // Any cell holding g_o gives its value; the geometric mean of the
        // diagonal entries of that cell bounds its magnitude.
        Eigen::Index ci = -1, cl = -1;
        for (Eigen::Index i = 0; i < m && ci < 0; ++i) {
            for (Eigen::Index l = 0; l < m; ++l) {
                if (static_cast<Eigen::Index>(gs.gramMoment[static_cast<std::size_t>(i * m + l)]) == o) {
                    ci = i;
                    cl = l;
                    break;
                }
            }
        }
        const double p = gs.G(ci, cl);
        const double s = std::max(std::abs(p), std::sqrt(std::abs(gs.G(ci, ci) * gs.G(cl, cl))));
        scale(m + o) = s > 0.0 ? s : 1.0;
        rep.numeric.col(m + o) = central(p, scale(m + o), [&](double v) {
            Eigen::MatrixXd g = gs.G;
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index l = 0; l < m; ++l) {
                    if (static_cast<Eigen::Index>(gs.gramMoment[static_cast<std::size_t>(i * m + l)]) == o) g(i, l) = v;
                }
            }
            return solve(g, gs.h);
        });
    }
    scale(m) = 0.0;  // g_0 is pinned

    const Eigen::MatrixXd diff = (rep.numeric - analytic) * scale.asDiagonal();
    const double ref = (analytic * scale.asDiagonal()).cwiseAbs().maxCoeff();
    rep.maxRelativeError = ref > 0.0 ? diff.cwiseAbs().maxCoeff() / ref : diff.cwiseAbs().maxCoeff();
    return rep;
}

}  // namespace polyreg
