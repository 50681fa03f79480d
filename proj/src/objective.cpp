#include "trefles/objective.hpp"

#include <cmath>

#include "trefles/model.hpp"
#include "trefles/psd_linalg.hpp"

namespace trefles {

namespace {

// Inverse and log-determinant of (a + jitter I) through one eigendecomposition.
void inv_and_logdet(const Eigen::MatrixXd& a, double jitter,
                    Eigen::MatrixXd* inv, double* logdet) {
    if (jitter < 0.0) jitter = 1e-6 * a.diagonal().mean();
    Eigen::MatrixXd j = symmetrize(a);
    j.diagonal().array() += jitter;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    if (es.info() != Eigen::Success) {
        throw NumericalFailure("objective: eigendecomposition failed");
    }
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev(0) <= 0.0) {
        throw NumericalFailure("objective: covariance not PD after jitter");
    }
    *logdet = ev.array().log().sum();
    *inv = symmetrize(es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose());
}

// residual(i, k) = c_ki - sigma(beta_k . x_i), zero where the label is missing.
Eigen::MatrixXd residuals(const Eigen::MatrixXd& scores, const Dataset& data) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
    for (Eigen::Index k = 0; k < scores.cols(); ++k) {
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            const int c = data.labels(i, k);
            if (c == kLabelMissing) continue;
            r(i, k) = static_cast<double>(c) - sigmoid(scores(i, k));
        }
    }
    return r;
}

}  // namespace

PriorMatrices compute_priors(const ModelParams& params, double jitter) {
    PriorMatrices p;
    inv_and_logdet(params.omega, jitter, &p.omega_inv, &p.omega_logdet);
    p.sigma_inv.reserve(params.sigma_blocks.size());
    p.sigma_logdet_sum = 0.0;
    for (const auto& s : params.sigma_blocks) {
        Eigen::MatrixXd inv;
        double ld;
        inv_and_logdet(s, jitter, &inv, &ld);
        p.sigma_inv.push_back(std::move(inv));
        p.sigma_logdet_sum += ld;
    }
    return p;
}

ObjectiveBreakdown objective(const ModelParams& params, const Dataset& data,
                             const FeatureGrouping& grouping,
                             const Hyperparams& hyper, double jitter) {
    const Eigen::Index m = data.n_features();
    const Eigen::Index k = data.n_tasks();
    const PriorMatrices priors = compute_priors(params, jitter);

    ObjectiveBreakdown b;
    const Eigen::MatrixXd beta = compute_beta(params, grouping);
    const Eigen::MatrixXd scores = data.features * beta;
    for (Eigen::Index kk = 0; kk < k; ++kk) {
        for (Eigen::Index i = 0; i < data.n_patients(); ++i) {
            const int c = data.labels(i, kk);
            if (c == kLabelMissing) continue;
            const double t = scores(i, kk);
            b.nll += softplus(-t) + (1.0 - static_cast<double>(c)) * t;
        }
    }

    for (size_t z = 0; z < params.w_blocks.size(); ++z) {
        const Eigen::MatrixXd& wz = params.w_blocks[z];
        b.mvn_prior +=
            0.5 * (priors.omega_inv * wz.transpose() * priors.sigma_inv[z] * wz)
                      .trace();
    }
    const double xi = 2.0 * static_cast<double>(m) + static_cast<double>(k) +
                      hyper.nu + 1.0;
    b.omega_logdet_terms = 0.5 * xi * priors.omega_logdet;
    b.omega_iw_trace = 0.5 * hyper.delta * (hyper.omega0 * priors.omega_inv).trace();
    b.sigma_logdet = 0.5 * static_cast<double>(k) * priors.sigma_logdet_sum;
    b.u_prior = 0.5 * (params.u * priors.omega_inv * params.u.transpose()).trace();
    b.tau_prior = 2.0 * std::log1p(params.tau * params.tau);
    b.total = b.nll + b.mvn_prior + b.omega_logdet_terms + b.omega_iw_trace +
              b.sigma_logdet + b.u_prior + b.tau_prior;
    if (!std::isfinite(b.total)) {
        throw NumericalFailure("objective: non-finite value");
    }
    return b;
}

std::vector<Eigen::MatrixXd> grad_w_full(const ModelParams& params,
                                         const Dataset& data,
                                         const FeatureGrouping& grouping,
                                         const PriorMatrices& priors) {
    const Eigen::MatrixXd lam = compute_lambda(params.u, params.omega);
    const Eigen::MatrixXd beta =
        params.tau * lam.cwiseProduct(assemble_rows(params.w_blocks, grouping));
    const Eigen::MatrixXd r = residuals(data.features * beta, data);
    // dO/dW data part: -(tau * Lambda) o (X' R)
    const Eigen::MatrixXd data_grad =
        (-params.tau) * lam.cwiseProduct(data.features.transpose() * r);
    std::vector<Eigen::MatrixXd> g = scatter_rows(data_grad, grouping);
    for (size_t z = 0; z < g.size(); ++z) {
        g[z] += priors.sigma_inv[z] * params.w_blocks[z] * priors.omega_inv;
    }
    return g;
}

Eigen::MatrixXd grad_u_full(const ModelParams& params, const Dataset& data,
                            const FeatureGrouping& grouping,
                            const PriorMatrices& priors) {
    const Eigen::MatrixXd w = assemble_rows(params.w_blocks, grouping);
    const Eigen::MatrixXd lam = compute_lambda(params.u, params.omega);
    const Eigen::MatrixXd dlam = compute_lambda_deriv(params.u, params.omega);
    const Eigen::MatrixXd beta = params.tau * lam.cwiseProduct(w);
    const Eigen::MatrixXd r = residuals(data.features * beta, data);
    return (-params.tau) *
               dlam.cwiseProduct(w).cwiseProduct(data.features.transpose() * r) +
           params.u * priors.omega_inv;
}

double grad_tau(const ModelParams& params, const Dataset& data,
                const FeatureGrouping& grouping) {
    const Eigen::MatrixXd w = assemble_rows(params.w_blocks, grouping);
    const Eigen::MatrixXd lam = compute_lambda(params.u, params.omega);
    const Eigen::MatrixXd beta = params.tau * lam.cwiseProduct(w);
    const Eigen::MatrixXd r = residuals(data.features * beta, data);
    // d(beta_k . x_i)/dtau = (lambda_k o w_k) . x_i
    const double data_term =
        -lam.cwiseProduct(w).cwiseProduct(data.features.transpose() * r).sum();
    return data_term + 4.0 * params.tau / (1.0 + params.tau * params.tau);
}

std::vector<Eigen::VectorXd> grad_w_instance(const ModelParams& params,
                                             const Dataset& data,
                                             const FeatureGrouping& grouping,
                                             Eigen::Index k, Eigen::Index i,
                                             const PriorMatrices& priors,
                                             double prior_scale) {
    const Eigen::MatrixXd lam = compute_lambda(params.u, params.omega);
    const Eigen::MatrixXd beta =
        params.tau * lam.cwiseProduct(assemble_rows(params.w_blocks, grouping));
    const double res = static_cast<double>(data.labels(i, k)) -
                       sigmoid(beta.col(k).dot(data.features.row(i).transpose()));
    std::vector<Eigen::VectorXd> g;
    g.reserve(params.w_blocks.size());
    const Eigen::VectorXd omega_col = priors.omega_inv.col(k);
    for (int z = 0; z < grouping.n_groups(); ++z) {
        const auto& rows = grouping.members[static_cast<size_t>(z)];
        const auto gz = static_cast<Eigen::Index>(rows.size());
        Eigen::VectorXd dat(gz);
        for (Eigen::Index r = 0; r < gz; ++r) {
            dat(r) = lam(rows[static_cast<size_t>(r)], k) *
                     data.features(i, rows[static_cast<size_t>(r)]);
        }
        const Eigen::VectorXd prior =
            priors.sigma_inv[static_cast<size_t>(z)] *
            (params.w_blocks[static_cast<size_t>(z)] * omega_col);
        g.push_back(-res * params.tau * dat + prior_scale * prior);
    }
    return g;
}

Eigen::VectorXd grad_u_instance(const ModelParams& params, const Dataset& data,
                                const FeatureGrouping& grouping, Eigen::Index k,
                                Eigen::Index i, const PriorMatrices& priors,
                                double prior_scale) {
    const Eigen::MatrixXd w = assemble_rows(params.w_blocks, grouping);
    const Eigen::MatrixXd lam = compute_lambda(params.u, params.omega);
    const Eigen::MatrixXd beta = params.tau * lam.cwiseProduct(w);
    const double res = static_cast<double>(data.labels(i, k)) -
                       sigmoid(beta.col(k).dot(data.features.row(i).transpose()));
    const double okk = params.omega(k, k);
    const Eigen::Index m = data.n_features();
    Eigen::VectorXd dat(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        dat(j) = lambda_deriv(params.u(j, k), okk) * w(j, k) * data.features(i, j);
    }
    return -res * params.tau * dat +
           prior_scale * (params.u * priors.omega_inv.col(k));
}

Eigen::MatrixXd closed_form_omega(const ModelParams& params,
                                  const Hyperparams& hyper, double inv_jitter,
                                  bool include_u_prior) {
    Eigen::MatrixXd a = 0.5 * hyper.delta * hyper.omega0;
    if (include_u_prior) a += 0.5 * params.u.transpose() * params.u;
    const PriorMatrices priors = compute_priors(params, inv_jitter);
    for (size_t z = 0; z < params.w_blocks.size(); ++z) {
        const Eigen::MatrixXd& wz = params.w_blocks[z];
        a += 0.5 * wz.transpose() * priors.sigma_inv[z] * wz;
    }
    return normalize_trace(sym_sqrt(symmetrize(a)));
}

Eigen::MatrixXd closed_form_sigma(const ModelParams& params, int z,
                                  double jitter) {
    const Eigen::MatrixXd omega_inv = psd_inverse(params.omega);
    const Eigen::MatrixXd& wz = params.w_blocks[static_cast<size_t>(z)];
    Eigen::MatrixXd b = wz * omega_inv * wz.transpose();
    b.diagonal().array() += jitter;
    return normalize_trace(sym_sqrt(symmetrize(b)));
}

}  // namespace trefles
