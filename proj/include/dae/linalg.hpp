#pragma once

#include <Eigen/Core>
#include <vector>

namespace dae {

struct SymmetricEigen {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // column i pairs with values[i]
    int sweeps = 0;
};

/// Cyclic Jacobi rotations. Stops once the off-diagonal Frobenius norm falls
/// below tol times the matrix norm. Input must be symmetric (checked to 1e-12 relative).
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tol = 1e-12, int max_sweeps = 100);

/// Singular values of `a`, descending, via one-sided Jacobi.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

/// 2-norm (largest singular value).
double spectral_norm(const Eigen::MatrixXd& a);

}  // namespace dae
