#pragma once

// AUC and the stratified k-fold cross-validation harness.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "trefles/trainer.hpp"
#include "trefles/types.hpp"

namespace trefles {

// Rank-based Mann-Whitney AUC, ties credited 0.5. Throws DegenerateLabels if
// one class is absent.
double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

struct CvTaskReport {
    std::string task_name;
    double mean_auc = 0.0;
    double std_auc = 0.0;
    std::vector<double> fold_aucs;
};

struct CvReport {
    std::vector<CvTaskReport> per_task;
    double overall_mean = 0.0;
    double overall_std = 0.0;
    int folds = 0;
    std::uint64_t seed = 0;
};

enum class CvMethod { Trefles, Stl };

struct CvOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    CvMethod method = CvMethod::Trefles;
    double stl_l2 = 1.0;  // ridge strength for the STL baseline
    bool standardize = true;
    int threads = 0;  // 0 => one thread per fold
};

// Patients are dealt into folds by a seeded shuffle stratified on the label of
// the task with the rarest positive class; each fold is scored on its held-out
// patients with non-missing labels. Throws InfeasibleStratification when a
// fold/task ends up single-class.
CvReport kfold_cv(const Dataset& data, const FeatureGrouping& grouping,
                  const Hyperparams& hyper, const TrainConfig& config,
                  const CvOptions& options);

// Seeded stratified fold assignment, one entry per patient in [0, folds).
std::vector<int> assign_folds(const Dataset& data, int folds,
                              std::uint64_t seed);

// Table layout: one row per task plus an overall row, one "mean (std)" column
// per report.
std::string format_cv_table(const std::vector<std::string>& method_names,
                            const std::vector<CvReport>& reports);

}  // namespace trefles
