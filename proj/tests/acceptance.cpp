// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each check is scaled to run on a desktop machine.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "trefles/analysis.hpp"
#include "trefles/dataio.hpp"
#include "trefles/evaluation.hpp"
#include "trefles/model.hpp"
#include "trefles/objective.hpp"
#include "trefles/synthdata.hpp"
#include "trefles/trainer.hpp"

using namespace trefles;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --- 1. Gradient correctness ------------------------------------------------

bool grad_ok(double analytic, double fd) {
    if (std::abs(analytic) < 1e-3) return std::abs(analytic - fd) <= 1e-7;
    return std::abs(analytic - fd) / std::max(std::abs(fd), 1e-300) <= 1e-5;
}

bool check_gradients() {
    const auto t0 = Clock::now();
    const double h = 1e-5;
    const FeatureGrouping grouping = testutil::make_grouping(8, 2);
    const Hyperparams hyper = Hyperparams::defaults(3);
    int bad = 0;
    for (std::uint64_t pt = 0; pt < 100; ++pt) {
        const Dataset data = testutil::make_dataset(20, 8, 3, 9000 + pt, 0.15);
        // Moderate scales keep lambda (and so the objective) in a range where
        // the finite-difference reference itself is accurate to < 1e-8.
        const ModelParams params =
            testutil::make_params(grouping, 3, 9500 + pt, 0.25, 0.08);
        const PriorMatrices priors = compute_priors(params, 0.0);
        const auto gw = grad_w_full(params, data, grouping, priors);
        const auto gu = grad_u_full(params, data, grouping, priors);
        const double gt = grad_tau(params, data, grouping);
        auto eval = [&](const ModelParams& p) {
            return objective(p, data, grouping, hyper, 0.0).total;
        };
        for (size_t z = 0; z < params.w_blocks.size(); ++z) {
            for (Eigen::Index a = 0; a < params.w_blocks[z].rows(); ++a) {
                for (Eigen::Index b = 0; b < params.w_blocks[z].cols(); ++b) {
                    ModelParams pp = params, pm = params;
                    pp.w_blocks[z](a, b) += h;
                    pm.w_blocks[z](a, b) -= h;
                    if (!grad_ok(gw[z](a, b), (eval(pp) - eval(pm)) / (2 * h)))
                        ++bad;
                }
            }
        }
        for (Eigen::Index a = 0; a < params.u.rows(); ++a) {
            for (Eigen::Index b = 0; b < params.u.cols(); ++b) {
                ModelParams pp = params, pm = params;
                pp.u(a, b) += h;
                pm.u(a, b) -= h;
                if (!grad_ok(gu(a, b), (eval(pp) - eval(pm)) / (2 * h))) ++bad;
            }
        }
        ModelParams pp = params, pm = params;
        pp.tau += h;
        pm.tau -= h;
        if (!grad_ok(gt, (eval(pp) - eval(pm)) / (2 * h))) ++bad;
    }
    const double secs = seconds_since(t0);
    std::printf("  (gradient mismatches: %d, %.1f s)\n", bad, secs);
    return bad == 0 && secs < 30.0;
}

// --- 2. Closed-form optimality ----------------------------------------------

bool check_closed_form() {
    const auto t0 = Clock::now();
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(7100 + seed);
        // Z = 2 groups of size 2 so both Omega (K=2) and Sigma_z (G_z=2) are 2x2.
        const FeatureGrouping grouping = testutil::make_grouping(4, 2);
        const ModelParams p = testutil::make_params(grouping, 2, 7200 + seed);
        const Hyperparams hyper = Hyperparams::defaults(2);

        auto omega_obj = [&](const Eigen::MatrixXd& om) {
            const Eigen::MatrixXd oinv = om.inverse();
            double v = 0.5 * hyper.delta * (hyper.omega0 * oinv).trace();
            for (size_t z = 0; z < p.w_blocks.size(); ++z) {
                v += 0.5 * (oinv * p.w_blocks[z].transpose() *
                            p.sigma_blocks[z].inverse() * p.w_blocks[z])
                               .trace();
            }
            return v;
        };
        auto sigma_obj = [&](int z, const Eigen::MatrixXd& sg) {
            return 0.5 * (p.omega.inverse() *
                          p.w_blocks[static_cast<size_t>(z)].transpose() *
                          sg.inverse() * p.w_blocks[static_cast<size_t>(z)])
                             .trace();
        };

        const double best_om = omega_obj(closed_form_omega(p, hyper, 0.0));
        const double best_sg = sigma_obj(0, closed_form_sigma(p, 0, 0.0));
        for (int c = 0; c < 100000; ++c) {
            const Eigen::MatrixXd cand = testutil::random_trace1_psd(2, rng);
            if (omega_obj(cand) < best_om - 1e-8) ok = false;
            if (sigma_obj(0, cand) < best_sg - 1e-8) ok = false;
        }
    }
    const double secs = seconds_since(t0);
    std::printf("  (closed-form candidates done, %.1f s)\n", secs);
    return ok && secs < 60.0;
}

// --- 3. Monotone descent ----------------------------------------------------

bool check_monotone() {
    SynthSpec spec;
    spec.n_tasks = 4;
    spec.n_features = 20;
    spec.n_groups = 4;
    spec.n_patients = 200;
    spec.omega_true = SynthSpec::block_omega(4, 2, 0.7, 0.1);
    spec.seed = 17;
    auto [data, grouping, truth] = generate(spec);

    TrainConfig config;
    config.optimizer = Optimizer::PlainSgd;
    config.batch_mode = BatchMode::FullBatch;
    config.learning_rate = 1e-3;
    config.max_iter = 60;
    config.tol = 0.0;
    for (int attempt = 0; attempt <= 5; ++attempt) {
        const auto [model, report] = fit_standardized(
            data, grouping, Hyperparams::defaults(4), config, true);
        bool mono = report.objective_trace.size() >= 50;
        for (size_t i = 1; i < report.objective_trace.size(); ++i) {
            if (report.objective_trace[i] >
                report.objective_trace[i - 1] + 1e-9) {
                mono = false;
                break;
            }
        }
        if (mono) {
            std::printf("  (monotone over %d rounds at lr %.2e)\n",
                        report.iterations_run, config.learning_rate);
            return true;
        }
        config.learning_rate *= 0.5;
    }
    return false;
}

// --- 4. Horseshoe marginal --------------------------------------------------

bool check_horseshoe() {
    std::mt19937_64 rng(4100);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Correlated, non-unit-scale Omega; the transform rescales per column.
    Eigen::MatrixXd omega(2, 2);
    omega << 2.0, 0.9, 0.9, 0.8;
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(omega).matrixL();
    const int n = 10000;
    Eigen::MatrixXd u(n / 2, 2);
    Eigen::VectorXd z(2);
    for (int i = 0; i < n / 2; ++i) {
        z << normal(rng), normal(rng);
        u.row(i) = (l * z).transpose();
    }
    const Eigen::MatrixXd lam = compute_lambda(u, omega);
    std::vector<double> samples(lam.data(), lam.data() + n);
    std::sort(samples.begin(), samples.end());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double cdf = (2.0 / M_PI) * std::atan(samples[i]);
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - cdf));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    const double crit = 1.628 / std::sqrt(static_cast<double>(n));
    std::printf("  (KS statistic %.5f vs critical %.5f)\n", d, crit);
    return d < crit;
}

// --- 5. Structure recovery --------------------------------------------------

bool check_structure() {
    const auto t0 = Clock::now();
    int recovered = 0;
    double delta_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec spec;
        spec.n_tasks = 6;
        spec.n_features = 200;
        // One feature per group: Sigma_z degenerates to the scalar 1, so the
        // task covariance estimate is not diluted by row-covariance whitening
        // and the cross-task structure lands in Omega where this test looks.
        spec.n_groups = 200;
        spec.n_patients = 2000;
        spec.omega_true = SynthSpec::block_omega(6, 2, 0.8, 0.1);
        spec.signal_scale = 1.2;
        spec.seed = 5000 + seed;
        auto [data, grouping, truth] = generate(spec);

        TrainConfig config;
        config.batch_mode = BatchMode::FullBatch;
        config.optimizer = Optimizer::Adam;
        config.learning_rate = 0.05;
        config.max_iter = 300;
        config.tol = 1e-7;
        config.seed = seed;
        Hyperparams hyper = Hyperparams::defaults(6);
        hyper.delta = 0.1;  // weak identity pull keeps the blocks visible
        const auto [model, report] =
            fit_standardized(data, grouping, hyper, config, true);

        double within = 0.0, cross = 0.0;
        int nw = 0, nc = 0;
        for (int a = 0; a < 6; ++a) {
            for (int b = a + 1; b < 6; ++b) {
                if ((a < 3) == (b < 3)) {
                    within += model.corr(a, b);
                    ++nw;
                } else {
                    cross += model.corr(a, b);
                    ++nc;
                }
            }
        }
        const double delta = within / nw - cross / nc;
        delta_sum += delta;
        const Dendrogram dend = hcluster(model.corr, model.task_names);
        const auto labels = cut(dend, 2);
        const bool part_ok = labels[0] == labels[1] && labels[1] == labels[2] &&
                             labels[3] == labels[4] && labels[4] == labels[5] &&
                             labels[0] != labels[3];
        if (delta >= 0.2 && part_ok) ++recovered;
    }
    const double secs = seconds_since(t0);
    std::printf("  (recovered %d/10, mean delta %.3f, %.0f s)\n", recovered,
                delta_sum / 10.0, secs);
    return recovered >= 9 && secs < 600.0;
}

// --- 6. MTL over STL --------------------------------------------------------

bool check_mtl_over_stl() {
    double mtl_sum = 0.0, stl_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec spec;
        spec.n_tasks = 6;
        spec.n_features = 24;
        spec.n_groups = 4;
        spec.n_patients = 150;
        spec.omega_true = SynthSpec::block_omega(6, 2, 0.8, 0.2);
        spec.signal_scale = 1.2;
        spec.seed = 6000 + seed;
        auto [data, grouping, truth] = generate(spec);

        TrainConfig config;
        config.batch_mode = BatchMode::FullBatch;
        config.max_iter = 60;
        config.seed = seed;
        CvOptions options;
        options.folds = 5;
        options.seed = seed;
        const CvReport mtl =
            kfold_cv(data, grouping, Hyperparams::defaults(6), config, options);
        CvOptions stl_opt = options;
        stl_opt.method = CvMethod::Stl;
        const CvReport stl =
            kfold_cv(data, grouping, Hyperparams::defaults(6), config, stl_opt);
        mtl_sum += mtl.overall_mean;
        stl_sum += stl.overall_mean;
    }
    const double mtl_mean = mtl_sum / 10.0, stl_mean = stl_sum / 10.0;
    std::printf("  (TREFLES %.4f vs STL %.4f)\n", mtl_mean, stl_mean);
    return mtl_mean >= stl_mean + 0.02;
}

// --- 7. Shrinkage selectivity -----------------------------------------------

bool check_shrinkage() {
    SynthSpec spec;
    spec.n_tasks = 4;
    spec.n_features = 60;
    spec.n_groups = 4;
    spec.n_patients = 1200;
    spec.omega_true = SynthSpec::block_omega(4, 2, 0.7, 0.1);
    spec.sparsity = 0.9;  // 10% true support
    spec.signal_scale = 2.0;
    spec.seed = 71;
    auto [data, grouping, truth] = generate(spec);

    TrainConfig config;
    config.batch_mode = BatchMode::FullBatch;
    config.max_iter = 150;
    config.seed = 71;
    const auto [model, report] =
        fit_standardized(data, grouping, Hyperparams::defaults(4), config, true);

    std::vector<double> zero_mag, nonzero_mag;
    for (Eigen::Index j = 0; j < spec.n_features; ++j) {
        for (Eigen::Index k = 0; k < spec.n_tasks; ++k) {
            (truth.support(j, k) ? nonzero_mag : zero_mag)
                .push_back(std::abs(model.beta(j, k)));
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double mz = median(zero_mag), mn = median(nonzero_mag);
    std::printf("  (median |beta|: true-zero %.4f, true-nonzero %.4f)\n", mz, mn);
    return mz <= 0.2 * mn;
}

// --- 8. AUC oracle equivalence ----------------------------------------------

bool check_auc_oracle() {
    std::mt19937_64 rng(81);
    std::uniform_int_distribution<int> nsz(2, 200);
    std::uniform_int_distribution<int> lvl(0, 11);
    std::uniform_int_distribution<int> lab(0, 1);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = nsz(rng);
        Eigen::VectorXd s(n);
        std::vector<int> labels(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            s(i) = 0.25 * lvl(rng);  // coarse grid -> plenty of ties
            labels[static_cast<size_t>(i)] = lab(rng);
        }
        labels[0] = 0;
        labels[1] = 1;
        double num = 0.0, den = 0.0;
        for (int a = 0; a < n; ++a) {
            if (labels[static_cast<size_t>(a)] != 1) continue;
            for (int b = 0; b < n; ++b) {
                if (labels[static_cast<size_t>(b)] != 0) continue;
                den += 1.0;
                if (s(a) > s(b)) num += 1.0;
                else if (s(a) == s(b)) num += 0.5;
            }
        }
        if (auc(s, labels) != num / den) return false;
    }
    return true;
}

// --- 9. Round-trip integrity + CLI determinism ------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool check_roundtrip() {
    const fs::path dir =
        fs::temp_directory_path() / ("trefles_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    bool ok = true;

    // Library-level round trips.
    const Dataset d = testutil::make_dataset(25, 7, 3, 91, 0.2);
    const std::string dpath = (dir / "d.csv").string();
    save_dataset(d, dpath);
    const Dataset dback = load_dataset(dpath);
    ok = ok && (d.features - dback.features).cwiseAbs().maxCoeff() == 0.0 &&
         (d.labels - dback.labels).cwiseAbs().maxCoeff() == 0;

    const FeatureGrouping g = testutil::make_grouping(7, 3);
    const std::string gpath = (dir / "g.csv").string();
    save_groups(g, d.feature_names, {}, gpath);
    ok = ok && load_groups(gpath, d.feature_names).group_of == g.group_of;

    // Prior matrix round trip through the omega0 format.
    {
        std::ofstream om(dir / "om.csv");
        om << "task,t0,t1,t2\n";
        Eigen::MatrixXd m(3, 3);
        m << 1.0, 0.25, 0.125, 0.25, 1.0, 0.5, 0.125, 0.5, 1.0;
        for (int a = 0; a < 3; ++a) {
            om << "t" << a;
            for (int b = 0; b < 3; ++b) om << "," << fmt_double(m(a, b));
            om << "\n";
        }
        om.close();
        const Eigen::MatrixXd back =
            load_omega0((dir / "om.csv").string(), d.task_names);
        ok = ok && (back - m).cwiseAbs().maxCoeff() == 0.0;
    }

    // Model archive bitwise round trip.
    TrainConfig config;
    config.max_iter = 6;
    auto [model, report] =
        fit_standardized(d, g, Hyperparams::defaults(3), config, true);
    const std::string m1 = (dir / "m1.bin").string();
    const std::string m2 = (dir / "m2.bin").string();
    save_model(model, m1);
    save_model(load_model(m1), m2);
    ok = ok && slurp(m1) == slurp(m2);

    // End-to-end CLI determinism.
    for (const std::string tag : {"a", "b"}) {
        const std::string prefix = (dir / tag).string();
        testutil::run_cli(
            "simulate --tasks 3 --features 10 --groups 2 --patients 120"
            " --omega-within 0.6 --seed 13 --out-prefix " + prefix);
        testutil::run_cli("fit --data " + prefix + "_data.csv --groups " +
                          prefix + "_groups.csv --out " + prefix +
                          ".bin --max-iter 10 --seed 14");
        testutil::run_cli("predict --model " + prefix + ".bin --data " + prefix +
                          "_data.csv --out " + prefix + "_scores.csv");
    }
    const std::string pa = (dir / "a").string(), pb = (dir / "b").string();
    ok = ok && slurp(pa + "_data.csv") == slurp(pb + "_data.csv") &&
         slurp(pa + ".bin") == slurp(pb + ".bin") &&
         slurp(pa + "_scores.csv") == slurp(pb + "_scores.csv") &&
         !slurp(pa + ".bin").empty();

    fs::remove_all(dir);
    return ok;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        bool (*fn)();
    };
    const std::vector<Criterion> criteria{
        {"gradient correctness", check_gradients},
        {"closed-form optimality", check_closed_form},
        {"monotone descent", check_monotone},
        {"horseshoe marginal", check_horseshoe},
        {"structure recovery", check_structure},
        {"mtl over stl", check_mtl_over_stl},
        {"shrinkage selectivity", check_shrinkage},
        {"auc oracle equivalence", check_auc_oracle},
        {"round-trip integrity", check_roundtrip},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        bool ok = false;
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            std::printf("  (exception: %s)\n", e.what());
        }
        std::printf("%s: %s\n", ok ? "PASS" : "FAIL", c.name);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
