#pragma once

// File formats: dataset tables, feature group maps, prior matrices, model
// archives. All numeric fields serialize at 17 significant digits so a
// save/load round trip is bitwise exact.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "trefles/errors.hpp"
#include "trefles/synthdata.hpp"
#include "trefles/types.hpp"

namespace trefles {

struct MissingFeature : ValidationError {
    explicit MissingFeature(const std::string& m) : ValidationError(m) {}
};
struct DuplicateFeature : ValidationError {
    explicit DuplicateFeature(const std::string& m) : ValidationError(m) {}
};
struct UnknownFeature : ValidationError {
    explicit UnknownFeature(const std::string& m) : ValidationError(m) {}
};
struct AsymmetricMatrix : ValidationError {
    explicit AsymmetricMatrix(const std::string& m) : ValidationError(m) {}
};

// Dataset table: header `id,f:<feature>...,y:<task>...`; label cells are 0, 1
// or empty (patient not observed for that task).
Dataset load_dataset(const std::string& path, bool require_labels = true);
void save_dataset(const Dataset& data, const std::string& path);

// Two-column map `feature,group_label`; groups are indexed densely in first
// appearance order. Every feature must appear exactly once.
FeatureGrouping load_groups(const std::string& path,
                            const std::vector<std::string>& feature_names);
void save_groups(const FeatureGrouping& grouping,
                 const std::vector<std::string>& feature_names,
                 const std::vector<std::string>& group_labels,
                 const std::string& path);

// Prior task association matrix with a task-name header row and column;
// rows/columns are permuted into task_names order. Must be symmetric within
// 1e-9 and PSD after symmetrization.
Eigen::MatrixXd load_omega0(const std::string& path,
                            const std::vector<std::string>& task_names);

void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

void save_ground_truth(const GroundTruth& truth, const std::string& path);

// Write-to-temp plus atomic rename; no partial output on error.
void write_atomic(const std::string& path, const std::string& content);

// 17-significant-digit decimal form (exact double round trip).
std::string fmt_double(double v);

}  // namespace trefles
