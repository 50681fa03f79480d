#include "trefles/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "trefles/analysis.hpp"
#include "trefles/model.hpp"

namespace trefles {

Eigen::MatrixXd SynthSpec::block_omega(Eigen::Index k, Eigen::Index n_blocks,
                                       double within, double across) {
    Eigen::MatrixXd omega(k, k);
    const Eigen::Index base = k / n_blocks;
    auto block_of = [&](Eigen::Index t) {
        return std::min(t / base, n_blocks - 1);
    };
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            omega(a, b) = a == b ? 1.0
                                 : (block_of(a) == block_of(b) ? within : across);
        }
    }
    return omega;
}

std::tuple<Dataset, FeatureGrouping, GroundTruth> generate(const SynthSpec& spec) {
    const Eigen::Index k = spec.n_tasks, m = spec.n_features,
                       z = spec.n_groups, n = spec.n_patients;
    Eigen::MatrixXd omega_true = spec.omega_true.size() > 0
                                     ? spec.omega_true
                                     : Eigen::MatrixXd::Identity(k, k);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Contiguous near-equal feature groups.
    std::vector<int> group_of(static_cast<size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
        group_of[static_cast<size_t>(j)] =
            static_cast<int>(std::min(j * z / m, z - 1));
    }
    FeatureGrouping grouping = FeatureGrouping::from_group_of(group_of);

    // Features: equicorrelated within a group via a shared factor.
    const double rho = spec.feature_corr;
    Eigen::MatrixXd x(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int g = 0; g < grouping.n_groups(); ++g) {
            const double shared = normal(rng);
            for (int j : grouping.members[static_cast<size_t>(g)]) {
                x(i, j) = std::sqrt(rho) * shared +
                          std::sqrt(1.0 - rho) * normal(rng);
            }
        }
    }

    // Latent shrinkage rows u^j ~ N(0, omega_true); coefficient rows drawn
    // from the correlation form of omega_true so w marginals stay N(0, 1).
    const Eigen::MatrixXd lu = Eigen::LLT<Eigen::MatrixXd>(omega_true).matrixL();
    const Eigen::MatrixXd lw =
        Eigen::LLT<Eigen::MatrixXd>(cov_to_corr(omega_true)).matrixL();
    Eigen::MatrixXd u(m, k), w(m, k);
    Eigen::VectorXd zvec(k);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index t = 0; t < k; ++t) zvec(t) = normal(rng);
        u.row(j) = (lu * zvec).transpose();
        for (Eigen::Index t = 0; t < k; ++t) zvec(t) = normal(rng);
        w.row(j) = (lw * zvec).transpose();
    }
    const Eigen::MatrixXd lambda = compute_lambda(u, omega_true);
    Eigen::MatrixXd beta = spec.signal_scale * lambda.cwiseProduct(w);

    // Exact known support: zero a uniformly random subset of coordinates.
    GroundTruth truth;
    truth.support.setConstant(m, k, true);
    const auto total = static_cast<size_t>(m * k);
    const auto n_zero = static_cast<size_t>(
        std::llround(spec.sparsity * static_cast<double>(total)));
    std::vector<size_t> coords(total);
    std::iota(coords.begin(), coords.end(), 0);
    std::shuffle(coords.begin(), coords.end(), rng);
    for (size_t c = 0; c < n_zero; ++c) {
        const auto j = static_cast<Eigen::Index>(coords[c] / static_cast<size_t>(k));
        const auto t = static_cast<Eigen::Index>(coords[c] % static_cast<size_t>(k));
        beta(j, t) = 0.0;
        truth.support(j, t) = false;
    }

    Eigen::MatrixXi labels(n, k);
    const Eigen::MatrixXd scores = x * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = 0; t < k; ++t) {
            if (spec.missing_rate > 0.0 && unif(rng) < spec.missing_rate) {
                labels(i, t) = kLabelMissing;
            } else {
                labels(i, t) = unif(rng) < sigmoid(scores(i, t)) ? 1 : 0;
            }
        }
    }

    Dataset data;
    data.features = std::move(x);
    data.labels = std::move(labels);
    for (Eigen::Index i = 0; i < n; ++i) data.ids.push_back("p" + std::to_string(i));
    for (Eigen::Index j = 0; j < m; ++j) data.feature_names.push_back("x" + std::to_string(j));
    for (Eigen::Index t = 0; t < k; ++t) data.task_names.push_back("task" + std::to_string(t));

    truth.beta_true = std::move(beta);
    truth.omega_true = std::move(omega_true);
    truth.u_true = std::move(u);
    return {std::move(data), std::move(grouping), std::move(truth)};
}

}  // namespace trefles
