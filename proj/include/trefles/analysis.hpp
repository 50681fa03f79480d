#pragma once

// Post-hoc interpretation: correlation conversion, average-linkage
// hierarchical clustering of task associations, top-k risk factors.

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "trefles/types.hpp"

namespace trefles {

struct Merge {
    int cluster_a = 0;   // cluster ids: leaves 0..K-1, merges K, K+1, ...
    int cluster_b = 0;
    double height = 0.0;
};

struct Dendrogram {
    std::vector<Merge> merges;            // K-1 entries
    std::vector<std::string> leaf_names;  // K
};

// R[a][b] = omega[a][b] / sqrt(omega[a][a] * omega[b][b]), clamped to [-1, 1],
// unit diagonal. Throws DegenerateDiagonal on non-positive diagonal entries.
Eigen::MatrixXd cov_to_corr(const Eigen::MatrixXd& omega);

// Agglomerative clustering on dissimilarity 1 - r with average linkage.
// Ties broken toward the pair containing the lowest leaf index.
Dendrogram hcluster(const Eigen::MatrixXd& r,
                    const std::vector<std::string>& leaf_names = {});

// Undo the last n_clusters - 1 merges; labels are 0..n_clusters-1 in order of
// each cluster's first leaf.
std::vector<int> cut(const Dendrogram& d, int n_clusters);

// Features of beta column k sorted by descending coefficient (or |coefficient|
// with by_magnitude), ties broken by feature index.
std::vector<std::pair<std::string, double>> top_k_factors(
    const FittedModel& model, Eigen::Index k, int top,
    bool by_magnitude = false);

}  // namespace trefles
