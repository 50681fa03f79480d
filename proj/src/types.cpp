#include "trefles/types.hpp"

#include <cmath>
#include <set>

namespace trefles {

Eigen::Index Dataset::task_count(Eigen::Index k) const {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < labels.rows(); ++i) {
        if (labels(i, k) != kLabelMissing) ++n;
    }
    return n;
}

void Dataset::validate(bool require_labels) const {
    if (!features.allFinite()) {
        throw ValidationError("dataset: features contain non-finite values");
    }
    if (static_cast<Eigen::Index>(ids.size()) != features.rows() ||
        static_cast<Eigen::Index>(feature_names.size()) != features.cols() ||
        static_cast<Eigen::Index>(task_names.size()) != labels.cols() ||
        labels.rows() != features.rows()) {
        throw ValidationError("dataset: inconsistent dimensions");
    }
    if (!require_labels) return;
    for (Eigen::Index k = 0; k < labels.cols(); ++k) {
        Eigen::Index pos = 0, neg = 0;
        for (Eigen::Index i = 0; i < labels.rows(); ++i) {
            const int c = labels(i, k);
            if (c == 1) ++pos;
            else if (c == 0) ++neg;
            else if (c != kLabelMissing) {
                throw ValidationError("dataset: task '" + task_names[k] +
                                      "' has label outside {0,1,missing}");
            }
        }
        if (pos + neg == 0) {
            throw ValidationError("dataset: task '" + task_names[k] +
                                  "' has no observed labels");
        }
        if (pos == 0 || neg == 0) {
            throw ValidationError("dataset: task '" + task_names[k] + "' lacks " +
                                  (pos == 0 ? "positive" : "negative") +
                                  " examples");
        }
    }
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()), labels.cols());
    out.ids.reserve(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(rows[r]);
        out.labels.row(static_cast<Eigen::Index>(r)) = labels.row(rows[r]);
        out.ids.push_back(ids[static_cast<size_t>(rows[r])]);
    }
    out.feature_names = feature_names;
    out.task_names = task_names;
    return out;
}

FeatureGrouping FeatureGrouping::from_group_of(std::vector<int> group_of) {
    FeatureGrouping g;
    g.group_of = std::move(group_of);
    int z = 0;
    for (int gi : g.group_of) z = std::max(z, gi + 1);
    g.group_sizes.assign(static_cast<size_t>(z), 0);
    g.members.assign(static_cast<size_t>(z), {});
    for (size_t j = 0; j < g.group_of.size(); ++j) {
        const int gi = g.group_of[j];
        if (gi < 0) throw ValidationError("grouping: negative group index");
        ++g.group_sizes[static_cast<size_t>(gi)];
        g.members[static_cast<size_t>(gi)].push_back(static_cast<int>(j));
    }
    for (int s : g.group_sizes) {
        if (s == 0) throw ValidationError("grouping: empty group");
    }
    return g;
}

FeatureGrouping FeatureGrouping::trivial(Eigen::Index m) {
    return from_group_of(std::vector<int>(static_cast<size_t>(m), 0));
}

Hyperparams Hyperparams::defaults(Eigen::Index k) {
    Hyperparams h;
    h.omega0 = Eigen::MatrixXd::Identity(k, k);
    h.delta = 1.0;
    h.nu = static_cast<double>(k) + 2.0;
    return h;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& features) {
    const Eigen::Index n = features.rows(), m = features.cols();
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(m);
    s.scale = Eigen::VectorXd::Ones(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        bool binary = true;
        for (Eigen::Index i = 0; i < n && binary; ++i) {
            const double v = features(i, j);
            binary = (v == 0.0 || v == 1.0);
        }
        if (binary || n < 2) continue;
        const double mu = features.col(j).mean();
        const double var =
            (features.col(j).array() - mu).square().sum() / static_cast<double>(n - 1);
        const double sd = std::sqrt(var);
        s.mean(j) = mu;
        s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
    if (identity()) return features;
    if (features.cols() != mean.size()) {
        throw DimensionMismatch("standardizer: feature count mismatch");
    }
    return (features.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
}

Eigen::MatrixXd assemble_rows(const std::vector<Eigen::MatrixXd>& blocks,
                              const FeatureGrouping& grouping) {
    const Eigen::Index m = grouping.n_features();
    const Eigen::Index k = blocks.empty() ? 0 : blocks[0].cols();
    Eigen::MatrixXd full(m, k);
    for (int z = 0; z < grouping.n_groups(); ++z) {
        const auto& rows = grouping.members[static_cast<size_t>(z)];
        for (size_t r = 0; r < rows.size(); ++r) {
            full.row(rows[r]) = blocks[static_cast<size_t>(z)].row(static_cast<Eigen::Index>(r));
        }
    }
    return full;
}

std::vector<Eigen::MatrixXd> scatter_rows(const Eigen::MatrixXd& full,
                                          const FeatureGrouping& grouping) {
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(static_cast<size_t>(grouping.n_groups()));
    for (int z = 0; z < grouping.n_groups(); ++z) {
        const auto& rows = grouping.members[static_cast<size_t>(z)];
        Eigen::MatrixXd b(static_cast<Eigen::Index>(rows.size()), full.cols());
        for (size_t r = 0; r < rows.size(); ++r) {
            b.row(static_cast<Eigen::Index>(r)) = full.row(rows[r]);
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

}  // namespace trefles
