#pragma once

// Sampler for the model's own generative story; the recovery oracle used by
// the acceptance tests.

#include <Eigen/Dense>
#include <cstdint>
#include <tuple>

#include "trefles/types.hpp"

namespace trefles {

struct SynthSpec {
    Eigen::Index n_tasks = 2;
    Eigen::Index n_features = 10;
    Eigen::Index n_groups = 2;
    Eigen::Index n_patients = 100;
    Eigen::MatrixXd omega_true;    // K x K positive definite; identity if empty
    double sparsity = 0.0;         // fraction of coefficients forced to zero
    double signal_scale = 1.0;     // tau_true
    double feature_corr = 0.0;     // within-group equicorrelation, [0, 1)
    double missing_rate = 0.0;     // per-task label missingness, [0, 1)
    std::uint64_t seed = 0;

    // Block-structured task covariance: unit diagonal, `within` inside
    // consecutive equal blocks, `across` elsewhere.
    static Eigen::MatrixXd block_omega(Eigen::Index k, Eigen::Index n_blocks,
                                       double within, double across);
};

struct GroundTruth {
    Eigen::MatrixXd beta_true;   // M x K
    Eigen::MatrixXd omega_true;  // K x K
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support;  // M x K
    Eigen::MatrixXd u_true;      // M x K latent shrinkage draws
};

std::tuple<Dataset, FeatureGrouping, GroundTruth> generate(const SynthSpec& spec);

}  // namespace trefles
