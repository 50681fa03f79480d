#include "trefles/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "trefles/analysis.hpp"
#include "trefles/model.hpp"
#include "trefles/psd_linalg.hpp"

namespace trefles {

namespace {

struct AblationFlags {
    bool freeze_shrinkage = false;  // Lambda == 1, U and tau frozen
    bool freeze_sigma = false;      // Sigma_z == I/G_z
    bool freeze_omega = false;      // Omega == I/K
};

AblationFlags ablation_flags(Ablation a) {
    AblationFlags f;
    switch (a) {
        case Ablation::None:
            break;
        case Ablation::NoShrinkage:
            f.freeze_shrinkage = true;
            break;
        case Ablation::IdentitySigma:
            f.freeze_sigma = true;
            break;
        case Ablation::IndependentTasks:
            f.freeze_shrinkage = f.freeze_sigma = f.freeze_omega = true;
            break;
    }
    return f;
}

// Adam moments for a matrix-shaped parameter. Columns can advance at
// different step counts in stochastic mode.
struct AdamMat {
    Eigen::MatrixXd m, v;
    std::vector<long> t_col;

    void init(Eigen::Index rows, Eigen::Index cols) {
        m = Eigen::MatrixXd::Zero(rows, cols);
        v = Eigen::MatrixXd::Zero(rows, cols);
        t_col.assign(static_cast<size_t>(cols), 0);
    }

    void step_col(Eigen::Ref<Eigen::VectorXd> param, const Eigen::VectorXd& g,
                  Eigen::Index col, const TrainConfig& c) {
        long& t = t_col[static_cast<size_t>(col)];
        ++t;
        m.col(col) = c.adam_beta1 * m.col(col) + (1.0 - c.adam_beta1) * g;
        v.col(col) =
            c.adam_beta2 * v.col(col) + (1.0 - c.adam_beta2) * g.cwiseProduct(g);
        const double mc = 1.0 - std::pow(c.adam_beta1, static_cast<double>(t));
        const double vc = 1.0 - std::pow(c.adam_beta2, static_cast<double>(t));
        param -= (c.learning_rate / mc) *
                 (m.col(col).array() /
                  ((v.col(col).array() / vc).sqrt() + c.adam_eps))
                     .matrix();
    }
};

struct AdamScalar {
    double m = 0.0, v = 0.0;
    long t = 0;

    void step(double* param, double g, const TrainConfig& c) {
        ++t;
        m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
        v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g * g;
        const double mc = 1.0 - std::pow(c.adam_beta1, static_cast<double>(t));
        const double vc = 1.0 - std::pow(c.adam_beta2, static_cast<double>(t));
        *param -= c.learning_rate * (m / mc) / (std::sqrt(v / vc) + c.adam_eps);
    }
};

ModelParams init_params(const Dataset& data, const FeatureGrouping& grouping,
                        const TrainConfig& config) {
    const Eigen::Index m = data.n_features(), k = data.n_tasks();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> small(0.0, 0.01);
    ModelParams p;
    p.w_blocks.reserve(static_cast<size_t>(grouping.n_groups()));
    p.sigma_blocks.reserve(static_cast<size_t>(grouping.n_groups()));
    for (int z = 0; z < grouping.n_groups(); ++z) {
        const Eigen::Index gz = grouping.group_sizes[static_cast<size_t>(z)];
        Eigen::MatrixXd wz(gz, k);
        for (Eigen::Index r = 0; r < gz; ++r) {
            for (Eigen::Index c = 0; c < k; ++c) wz(r, c) = small(rng);
        }
        p.w_blocks.push_back(std::move(wz));
        p.sigma_blocks.push_back(Eigen::MatrixXd::Identity(gz, gz) /
                                 static_cast<double>(gz));
    }
    p.u = Eigen::MatrixXd::Zero(m, k);
    p.tau = 1.0;
    p.omega = Eigen::MatrixXd::Identity(k, k) / static_cast<double>(k);
    return p;
}

}  // namespace

std::pair<FittedModel, TrainReport> fit(const Dataset& data,
                                        const FeatureGrouping& grouping,
                                        const Hyperparams& hyper,
                                        const TrainConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    data.validate();
    if (grouping.n_features() != data.n_features()) {
        throw DimensionMismatch("fit: grouping does not match feature count");
    }
    if (hyper.omega0.rows() != data.n_tasks() ||
        hyper.omega0.cols() != data.n_tasks()) {
        throw DimensionMismatch("fit: omega0 dimension mismatch");
    }

    const Eigen::Index m = data.n_features(), k = data.n_tasks();
    const AblationFlags abl = ablation_flags(config.ablation);
    ModelParams params = init_params(data, grouping, config);

    // Non-missing instances and per-task counts.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> instances;  // (k, i)
    std::vector<double> n_k(static_cast<size_t>(k), 0.0);
    for (Eigen::Index kk = 0; kk < k; ++kk) {
        for (Eigen::Index i = 0; i < data.n_patients(); ++i) {
            if (data.labels(i, kk) != kLabelMissing) {
                instances.emplace_back(kk, i);
                n_k[static_cast<size_t>(kk)] += 1.0;
            }
        }
    }

    AdamMat adam_w, adam_u;
    AdamScalar adam_tau;
    adam_w.init(m, k);
    adam_u.init(m, k);
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

    TrainReport report;
    double prev_obj = std::numeric_limits<double>::quiet_NaN();

    for (int epoch = 0; epoch < config.max_iter; ++epoch) {
        PriorMatrices priors = compute_priors(params);

        if (config.batch_mode == BatchMode::Stochastic) {
            std::shuffle(instances.begin(), instances.end(), shuffle_rng);
            if (config.task_outer_loop) {
                std::stable_sort(instances.begin(), instances.end(),
                                 [](const auto& a, const auto& b) {
                                     return a.first < b.first;
                                 });
            }
            for (const auto& [kk, i] : instances) {
                const double prior_scale =
                    config.paper_sgd_scaling ? 1.0
                                             : 1.0 / n_k[static_cast<size_t>(kk)];
                const auto gw =
                    grad_w_instance(params, data, grouping, kk, i, priors,
                                    prior_scale);
                // Gather the column-k gradient over all blocks into feature
                // order so one optimizer step covers the whole column.
                Eigen::VectorXd gcol(m);
                for (int z = 0; z < grouping.n_groups(); ++z) {
                    const auto& rows = grouping.members[static_cast<size_t>(z)];
                    for (size_t r = 0; r < rows.size(); ++r) {
                        gcol(rows[r]) = gw[static_cast<size_t>(z)](
                            static_cast<Eigen::Index>(r));
                    }
                }
                Eigen::MatrixXd wfull = assemble_rows(params.w_blocks, grouping);
                if (config.optimizer == Optimizer::Adam) {
                    adam_w.step_col(wfull.col(kk), gcol, kk, config);
                } else {
                    wfull.col(kk) -= config.learning_rate * gcol;
                }
                params.w_blocks = scatter_rows(wfull, grouping);

                if (!abl.freeze_shrinkage) {
                    const Eigen::VectorXd gu = grad_u_instance(
                        params, data, grouping, kk, i, priors, prior_scale);
                    if (config.optimizer == Optimizer::Adam) {
                        adam_u.step_col(params.u.col(kk), gu, kk, config);
                    } else {
                        params.u.col(kk) -= config.learning_rate * gu;
                    }
                }
            }
        } else {
            const auto gw = grad_w_full(params, data, grouping, priors);
            Eigen::MatrixXd gfull = assemble_rows(gw, grouping);
            Eigen::MatrixXd wfull = assemble_rows(params.w_blocks, grouping);
            if (config.optimizer == Optimizer::Adam) {
                for (Eigen::Index kk = 0; kk < k; ++kk) {
                    adam_w.step_col(wfull.col(kk), gfull.col(kk), kk, config);
                }
            } else {
                wfull -= config.learning_rate * gfull;
            }
            params.w_blocks = scatter_rows(wfull, grouping);

            if (!abl.freeze_shrinkage) {
                const Eigen::MatrixXd gu =
                    grad_u_full(params, data, grouping, priors);
                if (config.optimizer == Optimizer::Adam) {
                    for (Eigen::Index kk = 0; kk < k; ++kk) {
                        adam_u.step_col(params.u.col(kk), gu.col(kk), kk, config);
                    }
                } else {
                    params.u -= config.learning_rate * gu;
                }
            }
        }

        if (!abl.freeze_shrinkage) {
            const double gt = grad_tau(params, data, grouping);
            if (config.optimizer == Optimizer::Adam) {
                adam_tau.step(&params.tau, gt, config);
            } else {
                params.tau -= config.learning_rate * gt;
            }
            params.tau = std::max(params.tau, config.tau_min);
        }

        if (!abl.freeze_omega) {
            params.omega = closed_form_omega(params, hyper, -1.0,
                                            /*include_u_prior=*/true);
        }
        if (!abl.freeze_sigma) {
            for (int z = 0; z < grouping.n_groups(); ++z) {
                params.sigma_blocks[static_cast<size_t>(z)] =
                    closed_form_sigma(params, z, config.jitter);
            }
        }

        const double obj =
            objective(params, data, grouping, hyper).surrogate();
        report.objective_trace.push_back(obj);
        report.iterations_run = epoch + 1;
        if (epoch > 0) {
            const double rel =
                std::abs(prev_obj - obj) / std::max(std::abs(prev_obj), 1e-12);
            if (rel < config.tol) {
                report.converged = true;
                prev_obj = obj;
                break;
            }
        }
        prev_obj = obj;
    }
    report.final_objective = prev_obj;

    FittedModel model;
    model.params = params;
    model.grouping = grouping;
    model.lambda = compute_lambda(params.u, params.omega);
    model.beta = compute_beta(params, grouping);
    model.omega = params.omega;
    model.corr = cov_to_corr(params.omega);
    model.feature_names = data.feature_names;
    model.task_names = data.task_names;
    for (int e = 0; e < report.iterations_run; ++e) {
        model.history.emplace_back(e + 1, report.objective_trace[static_cast<size_t>(e)]);
    }
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return {std::move(model), std::move(report)};
}

std::pair<FittedModel, TrainReport> fit_standardized(
    const Dataset& data, const FeatureGrouping& grouping,
    const Hyperparams& hyper, const TrainConfig& config, bool standardize) {
    if (!standardize) return fit(data, grouping, hyper, config);
    Standardizer scaler = Standardizer::fit(data.features);
    Dataset scaled = data;
    scaled.features = scaler.apply(data.features);
    auto [model, report] = fit(scaled, grouping, hyper, config);
    model.standardizer = std::move(scaler);
    return {std::move(model), std::move(report)};
}

Eigen::VectorXd stl_fit(const Dataset& data, Eigen::Index k, double l2,
                        const TrainConfig& config) {
    const Eigen::Index m = data.n_features();
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data.n_patients(); ++i) {
        if (data.labels(i, k) != kLabelMissing) rows.push_back(i);
    }
    bool has_pos = false, has_neg = false;
    for (Eigen::Index i : rows) {
        (data.labels(i, k) == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
        throw DegenerateLabels("stl_fit: task lacks one of the classes");
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), m);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = data.features.row(rows[r]);
        y(static_cast<Eigen::Index>(r)) = data.labels(rows[r], k);
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    AdamMat adam;
    adam.init(m, 1);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int epoch = 0; epoch < config.max_iter; ++epoch) {
        const Eigen::VectorXd t = x * w;
        Eigen::VectorXd r(t.size());
        double obj = 0.0;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            r(i) = y(i) - sigmoid(t(i));
            obj += softplus(-t(i)) + (1.0 - y(i)) * t(i);
        }
        obj += 0.5 * l2 * w.squaredNorm();
        const Eigen::VectorXd g = -x.transpose() * r + l2 * w;
        if (config.optimizer == Optimizer::Adam) {
            adam.step_col(w, g, 0, config);
        } else {
            w -= config.learning_rate * g;
        }
        if (epoch > 0 &&
            std::abs(prev - obj) / std::max(std::abs(prev), 1e-12) < config.tol) {
            break;
        }
        prev = obj;
    }
    return w;
}

}  // namespace trefles
