#pragma once

// Shared builders for the test suite: random datasets and parameter states,
// plus a tiny process-spawn helper for CLI tests.

#include <Eigen/Dense>
#include <array>
#include <cstdio>
#include <random>
#include <string>

#include "trefles/psd_linalg.hpp"
#include "trefles/types.hpp"

namespace testutil {

inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng,
                                  double ridge = 0.1) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) b(i, j) = normal(rng);
    return trefles::symmetrize(b * b.transpose()) +
           ridge * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_trace1_psd(Eigen::Index n, std::mt19937_64& rng) {
    return trefles::normalize_trace(random_spd(n, rng, 0.01));
}

inline trefles::Dataset make_dataset(Eigen::Index n, Eigen::Index m,
                                     Eigen::Index k, std::uint64_t seed,
                                     double missing_rate = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    trefles::Dataset d;
    d.features.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) d.features(i, j) = normal(rng);
    d.labels.resize(n, k);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (missing_rate > 0.0 && unif(rng) < missing_rate) {
                d.labels(i, t) = trefles::kLabelMissing;
            } else {
                d.labels(i, t) = unif(rng) < 0.5 ? 0 : 1;
            }
        }
        // Guarantee both classes per task.
        d.labels(0, t) = 0;
        d.labels(1, t) = 1;
    }
    for (Eigen::Index i = 0; i < n; ++i) d.ids.push_back("p" + std::to_string(i));
    for (Eigen::Index j = 0; j < m; ++j)
        d.feature_names.push_back("f" + std::to_string(j));
    for (Eigen::Index t = 0; t < k; ++t)
        d.task_names.push_back("t" + std::to_string(t));
    return d;
}

// Round-robin feature grouping with z groups.
inline trefles::FeatureGrouping make_grouping(Eigen::Index m, int z) {
    std::vector<int> group_of(static_cast<size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j)
        group_of[static_cast<size_t>(j)] = static_cast<int>(j) % z;
    return trefles::FeatureGrouping::from_group_of(group_of);
}

inline trefles::ModelParams make_params(const trefles::FeatureGrouping& grouping,
                                        Eigen::Index k, std::uint64_t seed,
                                        double w_scale = 0.5,
                                        double u_scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    trefles::ModelParams p;
    for (int z = 0; z < grouping.n_groups(); ++z) {
        const auto g = static_cast<Eigen::Index>(
            grouping.group_sizes[static_cast<size_t>(z)]);
        Eigen::MatrixXd w(g, k);
        for (Eigen::Index a = 0; a < g; ++a)
            for (Eigen::Index b = 0; b < k; ++b) w(a, b) = w_scale * normal(rng);
        p.w_blocks.push_back(w);
        p.sigma_blocks.push_back(random_trace1_psd(g, rng));
    }
    const Eigen::Index m = grouping.n_features();
    p.u.resize(m, k);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < k; ++b) p.u(a, b) = u_scale * normal(rng);
    p.tau = 0.8;
    p.omega = random_trace1_psd(k, rng);
    return p;
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr merged
};

inline CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TREFLES_CLI_PATH) + " " + args + " 2>&1";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.output.append(buf.data(), got);
    }
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace testutil
