#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "helpers.hpp"
#include "trefles/analysis.hpp"
#include "trefles/model.hpp"

using namespace trefles;

TEST_CASE("cov_to_corr pinned cases") {
    Eigen::MatrixXd d = Eigen::Vector3d(2.0, 5.0, 0.1).asDiagonal();
    CHECK((cov_to_corr(d) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-15);

    Eigen::MatrixXd a(2, 2);
    a << 4.0, 2.0, 2.0, 4.0;
    const Eigen::MatrixXd r = cov_to_corr(a);
    CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r(0, 0) == 1.0);

    Eigen::MatrixXd bad = a;
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(cov_to_corr(bad), DegenerateDiagonal);
}

TEST_CASE("cov_to_corr properties") {
    std::mt19937_64 rng(61);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd a = testutil::random_spd(5, rng);
        const Eigen::MatrixXd r = cov_to_corr(a);
        CHECK((r.diagonal().array() == 1.0).all());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        // Invariance under positive diagonal rescaling.
        Eigen::VectorXd scale(5);
        std::uniform_real_distribution<double> unif(0.5, 3.0);
        for (int i = 0; i < 5; ++i) scale(i) = unif(rng);
        const Eigen::MatrixXd scaled =
            scale.asDiagonal() * a * scale.asDiagonal();
        CHECK((cov_to_corr(scaled) - r).cwiseAbs().maxCoeff() < 1e-12);
    }
}

namespace {

Eigen::MatrixXd two_block_corr(int k, double within, double across) {
    Eigen::MatrixXd r(k, k);
    const int half = k / 2;
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            if (a == b) r(a, b) = 1.0;
            else r(a, b) = (a < half) == (b < half) ? within : across;
        }
    }
    return r;
}

}  // namespace

TEST_CASE("hcluster basics") {
    CHECK(hcluster(Eigen::MatrixXd::Identity(1, 1)).merges.empty());

    Eigen::MatrixXd r2(2, 2);
    r2 << 1.0, 0.3, 0.3, 1.0;
    const Dendrogram d2 = hcluster(r2);
    REQUIRE(d2.merges.size() == 1);
    CHECK(d2.merges[0].cluster_a == 0);
    CHECK(d2.merges[0].cluster_b == 1);
    CHECK(d2.merges[0].height == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("hcluster recovers two blocks and cut matches") {
    const Eigen::MatrixXd r = two_block_corr(6, 0.9, 0.1);
    const Dendrogram d = hcluster(r, {"a", "b", "c", "d", "e", "f"});
    REQUIRE(d.merges.size() == 5);
    // Heights non-decreasing for average linkage on a valid dissimilarity.
    for (size_t i = 1; i < d.merges.size(); ++i) {
        CHECK(d.merges[i].height >= d.merges[i - 1].height - 1e-12);
    }
    const auto labels = cut(d, 2);
    CHECK(labels == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("cut properties") {
    const Eigen::MatrixXd r = two_block_corr(6, 0.9, 0.1);
    const Dendrogram d = hcluster(r);
    CHECK(cut(d, 1) == std::vector<int>(6, 0));
    const auto all = cut(d, 6);
    CHECK(std::set<int>(all.begin(), all.end()).size() == 6);
    CHECK_THROWS_AS(cut(d, 0), BadClusterCount);
    CHECK_THROWS_AS(cut(d, 7), BadClusterCount);

    // Consecutive cuts differ by exactly one split.
    for (int n = 1; n < 6; ++n) {
        const auto c1 = cut(d, n);
        const auto c2 = cut(d, n + 1);
        // Count distinct (c1, c2) label pairs: must be n + 1 (one c1 cluster
        // maps to two c2 clusters, the rest map 1:1).
        std::set<std::pair<int, int>> pairs;
        for (size_t i = 0; i < 6; ++i) pairs.insert({c1[i], c2[i]});
        CHECK(pairs.size() == static_cast<size_t>(n) + 1);
    }
}

TEST_CASE("hcluster is permutation-equivariant in heights") {
    std::mt19937_64 rng(77);
    Eigen::MatrixXd base = cov_to_corr(testutil::random_spd(5, rng));
    const Dendrogram d = hcluster(base);
    std::vector<int> perm{3, 0, 4, 1, 2};
    Eigen::MatrixXd permuted(5, 5);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b)
            permuted(a, b) = base(perm[static_cast<size_t>(a)],
                                  perm[static_cast<size_t>(b)]);
    const Dendrogram dp = hcluster(permuted);
    REQUIRE(dp.merges.size() == d.merges.size());
    std::vector<double> h1, h2;
    for (const auto& m : d.merges) h1.push_back(m.height);
    for (const auto& m : dp.merges) h2.push_back(m.height);
    std::sort(h1.begin(), h1.end());
    std::sort(h2.begin(), h2.end());
    for (size_t i = 0; i < h1.size(); ++i) {
        CHECK(h1[i] == doctest::Approx(h2[i]).epsilon(1e-12));
    }
}

namespace {

FittedModel model_with_beta(const Eigen::MatrixXd& beta) {
    FittedModel m;
    m.beta = beta;
    for (Eigen::Index j = 0; j < beta.rows(); ++j)
        m.feature_names.push_back("f" + std::to_string(j));
    for (Eigen::Index k = 0; k < beta.cols(); ++k)
        m.task_names.push_back("t" + std::to_string(k));
    return m;
}

}  // namespace

TEST_CASE("top_k_factors") {
    Eigen::MatrixXd beta(3, 1);
    beta << 3.0, 1.0, 2.0;
    const FittedModel m = model_with_beta(beta);
    const auto top2 = top_k_factors(m, 0, 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].first == "f0");
    CHECK(top2[1].first == "f2");

    const auto zero = top_k_factors(model_with_beta(Eigen::MatrixXd::Zero(4, 1)), 0, 3);
    REQUIRE(zero.size() == 3);
    CHECK(zero[0].first == "f0");
    CHECK(zero[1].first == "f1");
    CHECK(zero[2].first == "f2");

    // top > M truncates.
    CHECK(top_k_factors(m, 0, 10).size() == 3);

    // Full-sort oracle on a random column.
    std::mt19937_64 rng(91);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd rb(20, 1);
    for (int j = 0; j < 20; ++j) rb(j, 0) = normal(rng);
    const FittedModel rm = model_with_beta(rb);
    const auto got = top_k_factors(rm, 0, 7);
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < 20; ++j) order.emplace_back(-rb(j, 0), j);
    std::sort(order.begin(), order.end());
    for (int i = 0; i < 7; ++i) {
        CHECK(got[static_cast<size_t>(i)].first ==
              "f" + std::to_string(order[static_cast<size_t>(i)].second));
    }

    // Magnitude mode flips the winner when the most negative dominates.
    Eigen::MatrixXd mb(3, 1);
    mb << -5.0, 2.0, 1.0;
    const auto mag = top_k_factors(model_with_beta(mb), 0, 1, true);
    CHECK(mag[0].first == "f0");
}
