#include "trefles/psd_linalg.hpp"

#include <cmath>
#include <string>

namespace trefles {

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd s = symmetrize(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) {
        throw NumericalFailure("sym_sqrt: eigendecomposition failed");
    }
    Eigen::VectorXd ev = es.eigenvalues();
    const double spectral = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    const double tol_eig = 1e-10 * spectral;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -tol_eig) {
            throw NonPSD("sym_sqrt: eigenvalue " + std::to_string(ev(i)) +
                         " below tolerance " + std::to_string(-tol_eig));
        }
        ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
    }
    return symmetrize(es.eigenvectors() * ev.asDiagonal() *
                      es.eigenvectors().transpose());
}

Eigen::MatrixXd psd_inverse(const Eigen::MatrixXd& a, double jitter) {
    const Eigen::Index n = a.rows();
    if (jitter < 0.0) {
        jitter = 1e-6 * a.diagonal().mean();
    }
    Eigen::MatrixXd j = symmetrize(a);
    j.diagonal().array() += jitter;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    if (es.info() != Eigen::Success) {
        throw NumericalFailure("psd_inverse: eigendecomposition failed");
    }
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev(0) <= 0.0) {
        throw NonPSD("psd_inverse: jittered matrix has eigenvalue " +
                     std::to_string(ev(0)));
    }
    Eigen::VectorXd inv_ev(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_ev(i) = 1.0 / ev(i);
    return symmetrize(es.eigenvectors() * inv_ev.asDiagonal() *
                      es.eigenvectors().transpose());
}

Eigen::MatrixXd normalize_trace(const Eigen::MatrixXd& a) {
    const double tr = a.trace();
    if (tr <= 1e-300) {
        throw DegenerateTrace("normalize_trace: trace " + std::to_string(tr));
    }
    return a / tr;
}

}  // namespace trefles
