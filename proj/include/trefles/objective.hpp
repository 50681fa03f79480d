#pragma once

// Negative log-posterior, analytic gradients, and the closed-form trace-1
// covariance updates of the alternating estimation.

#include <Eigen/Dense>
#include <vector>

#include "trefles/types.hpp"

namespace trefles {

struct ObjectiveBreakdown {
    double nll = 0.0;                 // logistic term
    double mvn_prior = 0.0;           // 1/2 sum_z tr[Omega^-1 Wz' Sigmaz^-1 Wz]
    double omega_logdet_terms = 0.0;  // ((2M+K+nu+1)/2) log|Omega|
    double omega_iw_trace = 0.0;      // (delta/2) tr(Omega0 Omega^-1)
    double sigma_logdet = 0.0;        // (K/2) sum_z log|Sigma_z|
    double u_prior = 0.0;             // 1/2 tr(U Omega^-1 U')
    double tau_prior = 0.0;           // 2 log(1 + tau^2)
    double total = 0.0;

    // Trace-constraint surrogate: logdet penalties replaced by the tr = 1
    // constraint, so they are dropped from the monitored value.
    double surrogate() const { return total - omega_logdet_terms - sigma_logdet; }
};

// Jittered inverses shared by the objective and the gradient evaluations.
struct PriorMatrices {
    Eigen::MatrixXd omega_inv;
    std::vector<Eigen::MatrixXd> sigma_inv;
    double omega_logdet = 0.0;      // of the jittered matrix
    double sigma_logdet_sum = 0.0;
};

// jitter < 0 selects psd_inverse's default (1e-6 * mean diagonal).
PriorMatrices compute_priors(const ModelParams& params, double jitter = -1.0);

ObjectiveBreakdown objective(const ModelParams& params, const Dataset& data,
                             const FeatureGrouping& grouping,
                             const Hyperparams& hyper, double jitter = -1.0);

// Full-batch gradients: data term summed over all non-missing instances,
// prior term applied once.
std::vector<Eigen::MatrixXd> grad_w_full(const ModelParams& params,
                                         const Dataset& data,
                                         const FeatureGrouping& grouping,
                                         const PriorMatrices& priors);

Eigen::MatrixXd grad_u_full(const ModelParams& params, const Dataset& data,
                            const FeatureGrouping& grouping,
                            const PriorMatrices& priors);

double grad_tau(const ModelParams& params, const Dataset& data,
                const FeatureGrouping& grouping);

// Per-instance stochastic gradients for instance (task k, patient i).
// prior_scale multiplies the prior contribution (1/|N_k| keeps one epoch's
// accumulated gradient consistent with the full-batch gradient; 1.0 matches
// the per-sample full-prior update).
std::vector<Eigen::VectorXd> grad_w_instance(const ModelParams& params,
                                             const Dataset& data,
                                             const FeatureGrouping& grouping,
                                             Eigen::Index k, Eigen::Index i,
                                             const PriorMatrices& priors,
                                             double prior_scale);

Eigen::VectorXd grad_u_instance(const ModelParams& params, const Dataset& data,
                                const FeatureGrouping& grouping, Eigen::Index k,
                                Eigen::Index i, const PriorMatrices& priors,
                                double prior_scale);

// Minimizer of 1/2 sum_z tr[Omega^-1 Wz' Sigmaz^-1 Wz] + (delta/2) tr(Omega0
// Omega^-1) over trace-1 PSD matrices: A^(1/2) / tr(A^(1/2)) with
// A = 1/2 sum_z Wz' Sigmaz^-1 Wz + (delta/2) Omega0.
// include_u_prior additionally folds 1/2 U'U into A, making the update the
// exact minimizer of the full Omega-restricted surrogate (the u-prior term
// 1/2 tr(U Omega^-1 U') also depends on Omega); off by default.
Eigen::MatrixXd closed_form_omega(const ModelParams& params,
                                  const Hyperparams& hyper,
                                  double inv_jitter = -1.0,
                                  bool include_u_prior = false);

// Minimizer of tr[Omega^-1 Wz' Sigmaz^-1 Wz] over trace-1 PSD Sigma_z:
// (Wz Omega^-1 Wz' + jitter I)^(1/2), trace-normalized. The absolute jitter
// keeps the update defined when Wz has rank < G_z (always when G_z > K).
Eigen::MatrixXd closed_form_sigma(const ModelParams& params, int z,
                                  double jitter = 1e-6);

}  // namespace trefles
