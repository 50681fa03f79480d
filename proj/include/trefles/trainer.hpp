#pragma once

// Alternating MAP estimation: SGD over W and U columns per task, a gradient
// step on tau, then closed-form trace-1 updates of Omega and each Sigma_z.

#include <cstdint>
#include <utility>
#include <vector>

#include "trefles/objective.hpp"
#include "trefles/types.hpp"

namespace trefles {

enum class Optimizer { PlainSgd, Adam };
enum class BatchMode { Stochastic, FullBatch };
enum class Ablation { None, NoShrinkage, IdentitySigma, IndependentTasks };

struct TrainConfig {
    double learning_rate = 0.01;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_iter = 200;           // epochs
    double tol = 1e-5;            // relative objective change
    BatchMode batch_mode = BatchMode::Stochastic;
    std::uint64_t seed = 0;
    double tau_min = kTauMin;
    double jitter = 1e-6;
    // Apply the full prior gradient per sampled instance (the original update
    // rule) instead of scaling it by 1/|N_k|.
    bool paper_sgd_scaling = false;
    // Visit instances task-by-task instead of one global shuffle.
    bool task_outer_loop = false;
    Ablation ablation = Ablation::None;
};

struct TrainReport {
    int iterations_run = 0;
    double final_objective = 0.0;
    std::vector<double> objective_trace;  // surrogate, one entry per epoch
    bool converged = false;
    double wall_time_seconds = 0.0;
};

// Run the alternation until the relative change of the constrained surrogate
// objective drops below tol or max_iter epochs pass.
std::pair<FittedModel, TrainReport> fit(const Dataset& data,
                                        const FeatureGrouping& grouping,
                                        const Hyperparams& hyper,
                                        const TrainConfig& config);

// fit() on z-scored continuous features; the scaler is fit here and stored in
// the model so prediction reapplies it.
std::pair<FittedModel, TrainReport> fit_standardized(
    const Dataset& data, const FeatureGrouping& grouping,
    const Hyperparams& hyper, const TrainConfig& config, bool standardize);

// Ridge-penalized logistic regression for a single task, fit full-batch with
// the same optimizer machinery. Rows with a missing label for task k are
// ignored.
Eigen::VectorXd stl_fit(const Dataset& data, Eigen::Index k, double l2,
                        const TrainConfig& config);

}  // namespace trefles
