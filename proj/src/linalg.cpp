#include "polyreg/linalg.hpp"

#include <cmath>
#include <limits>

#include <lapacke.h>

namespace polyreg {

SymmetricSolver::SymmetricSolver(const Eigen::MatrixXd& a) : a_(a) {
    const auto n = a.rows();
    d_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double diag = std::abs(a(i, i));
        d_(i) = diag > 0.0 && std::isfinite(diag) ? 1.0 / std::sqrt(diag) : 1.0;
    }
    factor_ = d_.asDiagonal() * a * d_.asDiagonal();
    const double anorm = factor_.cwiseAbs().colwise().sum().maxCoeff();
    pivots_.assign(static_cast<std::size_t>(n), 0);
    const lapack_int nn = static_cast<lapack_int>(n);
    if (n == 0) {
        ok_ = true;
        condition_ = 1.0;
        return;
    }
    lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', nn, factor_.data(), nn, pivots_.data());
    if (info != 0 || !factor_.allFinite()) {
        ok_ = false;
        condition_ = std::numeric_limits<double>::infinity();
        return;
    }
    double rcond = 0.0;
    info = LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', nn, factor_.data(), nn, pivots_.data(), anorm, &rcond);
    ok_ = info == 0;
    condition_ = (info == 0 && rcond > 0.0) ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd SymmetricSolver::solveOnce(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = d_.cwiseProduct(b);
    const lapack_int n = static_cast<lapack_int>(a_.rows());
    if (n > 0) {
        LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, factor_.data(), n, pivots_.data(), x.data(), n);
    }
    return d_.cwiseProduct(x);
}

Eigen::VectorXd SymmetricSolver::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = solveOnce(b);
    const Eigen::VectorXd r = b - a_ * x;
    x += solveOnce(r);
    return x;
}

Eigen::MatrixXd SymmetricSolver::inverse() const {
    const auto n = a_.rows();
    Eigen::MatrixXd inv(n, n);
    for (Eigen::Index i = 0; i < n; ++i) inv.col(i) = solve(Eigen::VectorXd::Unit(n, i));
    return 0.5 * (inv + inv.transpose());
}

}  // namespace polyreg
