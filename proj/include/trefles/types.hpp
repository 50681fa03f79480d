#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "trefles/errors.hpp"

namespace trefles {

// Label codes for Dataset::labels.
constexpr int kLabelMissing = -1;

constexpr double kTauMin = 1e-6;
constexpr double kLambdaMin = 1e-12;
constexpr double kLambdaMax = 1e12;

// Per-task observations. Tasks may observe different patient subsets:
// labels(i, k) == kLabelMissing means patient i is not in task k's cohort.
struct Dataset {
    Eigen::MatrixXd features;                // N x M
    Eigen::MatrixXi labels;                  // N x K, entries in {-1, 0, 1}
    std::vector<std::string> ids;            // N
    std::vector<std::string> feature_names;  // M
    std::vector<std::string> task_names;     // K

    Eigen::Index n_patients() const { return features.rows(); }
    Eigen::Index n_features() const { return features.cols(); }
    Eigen::Index n_tasks() const { return labels.cols(); }

    // Count of non-missing labels for task k.
    Eigen::Index task_count(Eigen::Index k) const;

    // Enforces: finite features, and (when require_labels) every task has at
    // least one positive and one negative example. Throws ValidationError.
    void validate(bool require_labels = true) const;

    // Row subset, preserving ids and names.
    Dataset subset(const std::vector<int>& rows) const;
};

// Partition of the M features into Z groups.
struct FeatureGrouping {
    std::vector<int> group_of;            // M entries in [0, Z)
    std::vector<int> group_sizes;         // Z
    std::vector<std::vector<int>> members;  // feature indices per group, in order

    int n_groups() const { return static_cast<int>(group_sizes.size()); }
    Eigen::Index n_features() const { return static_cast<Eigen::Index>(group_of.size()); }

    static FeatureGrouping from_group_of(std::vector<int> group_of);
    // All features in a single group.
    static FeatureGrouping trivial(Eigen::Index m);
};

// All parameters of the alternating estimation.
struct ModelParams {
    std::vector<Eigen::MatrixXd> w_blocks;      // Z blocks, G_z x K
    Eigen::MatrixXd u;                          // M x K
    double tau = 1.0;
    Eigen::MatrixXd omega;                      // K x K, trace 1 after updates
    std::vector<Eigen::MatrixXd> sigma_blocks;  // Z blocks, G_z x G_z, trace 1
};

struct Hyperparams {
    Eigen::MatrixXd omega0;  // K x K symmetric PSD
    double delta = 1.0;
    double nu = 1.0;

    // delta = 1, nu = K + 2, omega0 = I.
    static Hyperparams defaults(Eigen::Index k);
};

// Per-column standardization applied before the linear predictor.
// Identity when mean is empty.
struct Standardizer {
    Eigen::VectorXd mean;   // M (empty => identity)
    Eigen::VectorXd scale;  // M

    bool identity() const { return mean.size() == 0; }
    // Fit per-column z-score on continuous columns (any value outside {0,1});
    // binary columns are left untouched.
    static Standardizer fit(const Eigen::MatrixXd& features);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

struct TrainSettingsEcho {
    std::vector<std::pair<std::string, std::string>> entries;
};

struct FittedModel {
    Eigen::MatrixXd beta;    // M x K, tau * Lambda o W
    Eigen::MatrixXd lambda;  // M x K
    Eigen::MatrixXd omega;   // learned task covariance
    Eigen::MatrixXd corr;    // correlation form of omega
    ModelParams params;
    FeatureGrouping grouping;
    Standardizer standardizer;
    std::vector<std::string> feature_names;
    std::vector<std::string> task_names;
    std::vector<std::pair<int, double>> history;  // (epoch, objective)
    TrainSettingsEcho config_echo;
};

// Assemble the M x K coefficient matrix from per-group blocks, rows back in
// original feature order.
Eigen::MatrixXd assemble_rows(const std::vector<Eigen::MatrixXd>& blocks,
                              const FeatureGrouping& grouping);

// Inverse of assemble_rows.
std::vector<Eigen::MatrixXd> scatter_rows(const Eigen::MatrixXd& full,
                                          const FeatureGrouping& grouping);

}  // namespace trefles
