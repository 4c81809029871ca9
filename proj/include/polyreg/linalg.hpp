#pragma once

#include <vector>

#include <Eigen/Dense>

namespace polyreg {

// Bunch-Kaufman factorization of a symmetric (possibly indefinite) matrix
// after symmetric diagonal equilibration A_s = D A D, D_ii = |A_ii|^-1/2.
// The reported condition number is the LAPACK 1-norm estimate of A_s.
class SymmetricSolver {
public:
    explicit SymmetricSolver(const Eigen::MatrixXd& a);

    // False when the factorization hit an exactly zero pivot.
    bool ok() const noexcept { return ok_; }
    // +inf when singular.
    double conditionEstimate() const noexcept { return condition_; }

    // Solution of A x = b with one step of iterative refinement.
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd inverse() const;

private:
    Eigen::VectorXd solveOnce(const Eigen::VectorXd& b) const;

    Eigen::MatrixXd a_;
    Eigen::VectorXd d_;
    Eigen::MatrixXd factor_;
    std::vector<int> pivots_;
    bool ok_ = false;
    double condition_ = 0.0;
};

}  // namespace polyreg
