#pragma once

// Symmetric positive-(semi)definite matrix utilities backing the closed-form
// covariance updates and the matrix-normal prior terms.

#include <Eigen/Dense>

#include "trefles/errors.hpp"

namespace trefles {

// (A + A^T)/2. Covariance-like matrices are pushed through this after every
// arithmetic update to kill floating-point drift.
inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

// Symmetric square root via eigendecomposition. Eigenvalues in
// [-tol_eig, 0) are clamped to zero, where tol_eig = 1e-10 * spectral norm.
// Throws NonPSD for eigenvalues below -tol_eig.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a);

// Inverse of (a + jitter*I). jitter < 0 selects the default
// 1e-6 * mean(diag(a)). Throws NonPSD if the jittered matrix is not PD.
Eigen::MatrixXd psd_inverse(const Eigen::MatrixXd& a, double jitter = -1.0);

// a / trace(a). Throws DegenerateTrace when trace(a) <= 1e-300.
Eigen::MatrixXd normalize_trace(const Eigen::MatrixXd& a);

}  // namespace trefles
