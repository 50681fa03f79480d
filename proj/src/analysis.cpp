#include "trefles/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trefles/errors.hpp"

namespace trefles {

Eigen::MatrixXd cov_to_corr(const Eigen::MatrixXd& omega) {
    const Eigen::Index k = omega.rows();
    for (Eigen::Index a = 0; a < k; ++a) {
        if (!(omega(a, a) > 0.0)) {
            throw DegenerateDiagonal("cov_to_corr: diagonal entry " +
                                     std::to_string(a) + " not positive");
        }
    }
    Eigen::MatrixXd r(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            if (a == b) {
                r(a, b) = 1.0;
                continue;
            }
            double v = omega(a, b) / std::sqrt(omega(a, a) * omega(b, b));
            r(a, b) = std::clamp(v, -1.0, 1.0);
        }
    }
    return r;
}

Dendrogram hcluster(const Eigen::MatrixXd& r,
                    const std::vector<std::string>& leaf_names) {
    const int k = static_cast<int>(r.rows());
    Dendrogram d;
    if (leaf_names.empty()) {
        for (int i = 0; i < k; ++i) d.leaf_names.push_back("task" + std::to_string(i));
    } else {
        d.leaf_names = leaf_names;
    }

    struct Cluster {
        int id;
        int min_leaf;
        int size;
    };
    // Active clusters kept sorted by min_leaf so the first strict minimum in
    // the scan realizes the lowest-leaf tie-break.
    std::vector<Cluster> active;
    for (int i = 0; i < k; ++i) active.push_back({i, i, 1});

    // Pairwise dissimilarities indexed by cluster id (ids grow to 2K-1).
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) dist(a, b) = 1.0 - r(a, b);
    }

    int next_id = k;
    while (active.size() > 1) {
        size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (size_t a = 0; a + 1 < active.size(); ++a) {
            for (size_t b = a + 1; b < active.size(); ++b) {
                const double v = dist(active[a].id, active[b].id);
                if (v < best) {
                    best = v;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const Cluster ca = active[best_a], cb = active[best_b];
        d.merges.push_back({ca.id, cb.id, best});
        const Cluster merged{next_id, std::min(ca.min_leaf, cb.min_leaf),
                             ca.size + cb.size};
        // Average linkage over leaf pairs.
        for (const Cluster& c : active) {
            if (c.id == ca.id || c.id == cb.id) continue;
            dist(merged.id, c.id) = dist(c.id, merged.id) =
                (ca.size * dist(ca.id, c.id) + cb.size * dist(cb.id, c.id)) /
                static_cast<double>(merged.size);
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_a));
        active.insert(std::upper_bound(active.begin(), active.end(), merged,
                                       [](const Cluster& x, const Cluster& y) {
                                           return x.min_leaf < y.min_leaf;
                                       }),
                      merged);
        ++next_id;
    }
    return d;
}

std::vector<int> cut(const Dendrogram& d, int n_clusters) {
    const int k = static_cast<int>(d.leaf_names.size());
    if (n_clusters < 1 || n_clusters > k) {
        throw BadClusterCount("cut: n_clusters " + std::to_string(n_clusters) +
                              " outside [1, " + std::to_string(k) + "]");
    }
    std::vector<int> parent(static_cast<size_t>(2 * k));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            x = parent[static_cast<size_t>(x)] =
                parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
        }
        return x;
    };
    const int apply = k - n_clusters;  // merges to keep
    for (int i = 0; i < apply; ++i) {
        const Merge& mg = d.merges[static_cast<size_t>(i)];
        parent[static_cast<size_t>(find(mg.cluster_a))] = k + i;
        parent[static_cast<size_t>(find(mg.cluster_b))] = k + i;
    }
    std::vector<int> labels(static_cast<size_t>(k), -1);
    std::vector<int> root_label(static_cast<size_t>(2 * k), -1);
    int next = 0;
    for (int leaf = 0; leaf < k; ++leaf) {
        const int r = find(leaf);
        if (root_label[static_cast<size_t>(r)] < 0) {
            root_label[static_cast<size_t>(r)] = next++;
        }
        labels[static_cast<size_t>(leaf)] = root_label[static_cast<size_t>(r)];
    }
    return labels;
}

std::vector<std::pair<std::string, double>> top_k_factors(
    const FittedModel& model, Eigen::Index k, int top, bool by_magnitude) {
    if (top < 1) throw ValidationError("top_k_factors: top must be >= 1");
    const Eigen::Index m = model.beta.rows();
    std::vector<Eigen::Index> order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                         const double va = by_magnitude
                                               ? std::abs(model.beta(a, k))
                                               : model.beta(a, k);
                         const double vb = by_magnitude
                                               ? std::abs(model.beta(b, k))
                                               : model.beta(b, k);
                         return va > vb;
                     });
    std::vector<std::pair<std::string, double>> out;
    const auto n = std::min<Eigen::Index>(top, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.emplace_back(model.feature_names[static_cast<size_t>(order[static_cast<size_t>(i)])],
                         model.beta(order[static_cast<size_t>(i)], k));
    }
    return out;
}

}  // namespace trefles
