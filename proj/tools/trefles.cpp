// Command-line front door: fit, predict, cv, simulate, analyze.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "trefles/analysis.hpp"
#include "trefles/dataio.hpp"
#include "trefles/evaluation.hpp"
#include "trefles/model.hpp"
#include "trefles/synthdata.hpp"
#include "trefles/trainer.hpp"

namespace {

using namespace trefles;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonTrainFlags {
    double lr = 0.01;
    int max_iter = 200;
    double tol = 1e-5;
    std::string batch_mode = "stochastic";
    std::string optimizer = "adam";
    std::string ablation = "none";
    bool paper_sgd_scaling = false;
    bool no_standardize = false;
    double delta = 1.0;
    double nu = -1.0;  // default K + 2
};

void add_train_flags(CLI::App* cmd, CommonTrainFlags* f) {
    cmd->add_option("--lr", f->lr, "learning rate");
    cmd->add_option("--max-iter", f->max_iter, "maximum training epochs");
    cmd->add_option("--tol", f->tol, "relative objective change tolerance");
    cmd->add_option("--batch-mode", f->batch_mode)
        ->check(CLI::IsMember({"stochastic", "full_batch"}));
    cmd->add_option("--optimizer", f->optimizer)
        ->check(CLI::IsMember({"plain_sgd", "adam"}));
    cmd->add_option("--ablation", f->ablation)
        ->check(CLI::IsMember(
            {"none", "no_shrinkage", "identity_sigma", "independent_tasks"}));
    cmd->add_flag("--paper-sgd-scaling", f->paper_sgd_scaling,
                  "apply the full prior gradient per sampled instance");
    cmd->add_flag("--no-standardize", f->no_standardize,
                  "skip z-scoring of continuous feature columns");
    cmd->add_option("--delta", f->delta, "inverse-Wishart strength");
    cmd->add_option("--nu", f->nu, "inverse-Wishart degrees (default K + 2)");
}

TrainConfig make_config(const CommonTrainFlags& f, std::uint64_t seed) {
    TrainConfig c;
    c.learning_rate = f.lr;
    c.max_iter = f.max_iter;
    c.tol = f.tol;
    c.batch_mode = f.batch_mode == "full_batch" ? BatchMode::FullBatch
                                                : BatchMode::Stochastic;
    c.optimizer = f.optimizer == "plain_sgd" ? Optimizer::PlainSgd
                                             : Optimizer::Adam;
    c.paper_sgd_scaling = f.paper_sgd_scaling;
    c.seed = seed;
    if (f.ablation == "no_shrinkage") c.ablation = Ablation::NoShrinkage;
    else if (f.ablation == "identity_sigma") c.ablation = Ablation::IdentitySigma;
    else if (f.ablation == "independent_tasks") c.ablation = Ablation::IndependentTasks;
    return c;
}

Hyperparams make_hyper(const CommonTrainFlags& f, const std::string& omega0_path,
                       const std::vector<std::string>& task_names) {
    Hyperparams h = Hyperparams::defaults(static_cast<Eigen::Index>(task_names.size()));
    if (!omega0_path.empty()) h.omega0 = load_omega0(omega0_path, task_names);
    h.delta = f.delta;
    if (f.nu > 0.0) h.nu = f.nu;
    return h;
}

TrainSettingsEcho echo_settings(const CommonTrainFlags& f,
                                const Hyperparams& hyper, std::uint64_t seed) {
    TrainSettingsEcho e;
    e.entries = {{"lr", fmt_double(f.lr)},
                 {"max_iter", std::to_string(f.max_iter)},
                 {"tol", fmt_double(f.tol)},
                 {"batch_mode", f.batch_mode},
                 {"optimizer", f.optimizer},
                 {"ablation", f.ablation},
                 {"paper_sgd_scaling", f.paper_sgd_scaling ? "1" : "0"},
                 {"standardize", f.no_standardize ? "0" : "1"},
                 {"delta", fmt_double(hyper.delta)},
                 {"nu", fmt_double(hyper.nu)},
                 {"seed", std::to_string(seed)}};
    return e;
}

int cmd_fit(const std::string& data_path, const std::string& groups_path,
            const std::string& omega0_path, const std::string& out_path,
            const CommonTrainFlags& flags, std::uint64_t seed) {
    Dataset data = load_dataset(data_path);
    FeatureGrouping grouping = load_groups(groups_path, data.feature_names);
    Hyperparams hyper = make_hyper(flags, omega0_path, data.task_names);
    TrainConfig config = make_config(flags, seed);
    auto [model, report] =
        fit_standardized(data, grouping, hyper, config, !flags.no_standardize);
    model.config_echo = echo_settings(flags, hyper, seed);
    save_model(model, out_path);
    std::cout << "epochs " << report.iterations_run << "\n"
              << "converged " << (report.converged ? 1 : 0) << "\n"
              << "final_objective " << fmt_double(report.final_objective) << "\n"
              << "model " << out_path << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    FittedModel model = load_model(model_path);
    Dataset data = load_dataset(data_path, /*require_labels=*/false);
    if (data.feature_names != model.feature_names) {
        throw DimensionMismatch(
            "predict: dataset feature columns do not match the model archive");
    }
    const Eigen::MatrixXd scores = predict_all(model, data.features);
    std::ostringstream os;
    os << "id";
    for (const auto& t : model.task_names) os << "," << t;
    os << "\n";
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        os << data.ids[static_cast<size_t>(i)];
        for (Eigen::Index k = 0; k < scores.cols(); ++k) {
            os << "," << fmt_double(scores(i, k));
        }
        os << "\n";
    }
    write_atomic(out_path, os.str());
    std::cout << "scores " << out_path << "\n";
    return 0;
}

int cmd_cv(const std::string& data_path, const std::string& groups_path,
           const std::string& omega0_path, const std::string& out_path,
           int folds, const std::vector<std::string>& baselines,
           const CommonTrainFlags& flags, std::uint64_t seed, int threads,
           double stl_l2) {
    Dataset data = load_dataset(data_path);
    FeatureGrouping grouping = load_groups(groups_path, data.feature_names);
    Hyperparams hyper = make_hyper(flags, omega0_path, data.task_names);
    TrainConfig config = make_config(flags, seed);
    CvOptions options;
    options.folds = folds;
    options.seed = seed;
    options.standardize = !flags.no_standardize;
    options.threads = threads;
    options.stl_l2 = stl_l2;

    std::vector<std::string> names{"TREFLES"};
    std::vector<CvReport> reports{kfold_cv(data, grouping, hyper, config, options)};
    for (const auto& b : baselines) {
        if (b == "stl") {
            CvOptions o = options;
            o.method = CvMethod::Stl;
            names.push_back("STL");
            reports.push_back(kfold_cv(data, grouping, hyper, config, o));
        } else {  // trefles-ablations
            for (const auto& [label, abl] :
                 {std::pair<std::string, Ablation>{"no_shrinkage", Ablation::NoShrinkage},
                  {"identity_sigma", Ablation::IdentitySigma},
                  {"independent_tasks", Ablation::IndependentTasks}}) {
                TrainConfig c = config;
                c.ablation = abl;
                names.push_back(label);
                reports.push_back(kfold_cv(data, grouping, hyper, c, options));
            }
        }
    }
    const std::string table = format_cv_table(names, reports);
    std::cout << table;
    if (!out_path.empty()) write_atomic(out_path, table);
    return 0;
}

void load_spec_file(const std::string& path, SynthSpec* spec) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open spec file '" + path + "'");
    std::string key;
    double value;
    while (in >> key >> value) {
        if (key == "tasks") spec->n_tasks = static_cast<Eigen::Index>(value);
        else if (key == "features") spec->n_features = static_cast<Eigen::Index>(value);
        else if (key == "groups") spec->n_groups = static_cast<Eigen::Index>(value);
        else if (key == "patients") spec->n_patients = static_cast<Eigen::Index>(value);
        else if (key == "sparsity") spec->sparsity = value;
        else if (key == "signal_scale") spec->signal_scale = value;
        else if (key == "feature_corr") spec->feature_corr = value;
        else if (key == "missing_rate") spec->missing_rate = value;
        else if (key == "seed") spec->seed = static_cast<std::uint64_t>(value);
        else throw ParseError("spec file: unknown key '" + key + "'");
    }
}

int cmd_simulate(const SynthSpec& spec, const std::string& out_prefix) {
    auto [data, grouping, truth] = generate(spec);
    save_dataset(data, out_prefix + "_data.csv");
    save_groups(grouping, data.feature_names, {}, out_prefix + "_groups.csv");
    save_ground_truth(truth, out_prefix + "_truth.txt");
    std::cout << "data " << out_prefix << "_data.csv\n"
              << "groups " << out_prefix << "_groups.csv\n"
              << "truth " << out_prefix << "_truth.txt\n";
    return 0;
}

int cmd_analyze(const std::string& model_path, int clusters, int top,
                bool by_magnitude) {
    FittedModel model = load_model(model_path);
    const auto k = static_cast<Eigen::Index>(model.task_names.size());
    std::cout << "correlation\n";
    for (Eigen::Index a = 0; a < k; ++a) {
        std::cout << model.task_names[static_cast<size_t>(a)];
        for (Eigen::Index b = 0; b < k; ++b) {
            std::cout << "\t" << fmt_double(model.corr(a, b));
        }
        std::cout << "\n";
    }
    if (k < 2) {
        std::cout << "dendrogram none (single task)\n";
    } else {
        const Dendrogram d = hcluster(model.corr, model.task_names);
        std::cout << "dendrogram " << d.merges.size() << "\n";
        for (const auto& mg : d.merges) {
            std::cout << mg.cluster_a << "\t" << mg.cluster_b << "\t"
                      << fmt_double(mg.height) << "\n";
        }
        if (clusters > 0) {
            const auto labels = cut(d, clusters);
            std::cout << "clusters " << clusters << "\n";
            for (Eigen::Index t = 0; t < k; ++t) {
                std::cout << model.task_names[static_cast<size_t>(t)] << "\t"
                          << labels[static_cast<size_t>(t)] << "\n";
            }
        }
    }
    for (Eigen::Index t = 0; t < k; ++t) {
        const auto factors = top_k_factors(model, t, top, by_magnitude);
        std::cout << "top_factors " << model.task_names[static_cast<size_t>(t)]
                  << "\n";
        for (const auto& [name, coef] : factors) {
            std::cout << name << "\t" << fmt_double(coef) << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TREFLES: multi-task risk modeling with correlated shrinkage"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --seed/--threads appear after the subcommand too
    std::uint64_t seed = 0;
    bool verbose = false;
    int threads = 0;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_flag("--verbose", verbose);
    app.add_option("--threads", threads, "max concurrent CV folds");

    CommonTrainFlags fit_flags, cv_flags;
    std::string data_path, groups_path, omega0_path, out_path, model_path;
    std::string cv_data, cv_groups, cv_omega0, cv_out;
    int folds = 5;
    std::vector<std::string> baselines;
    double stl_l2 = 1.0;

    auto* fit_cmd = app.add_subcommand("fit", "estimate a model");
    fit_cmd->add_option("--data", data_path)->required();
    fit_cmd->add_option("--groups", groups_path)->required();
    fit_cmd->add_option("--omega0", omega0_path);
    fit_cmd->add_option("--out", out_path)->required();
    add_train_flags(fit_cmd, &fit_flags);

    std::string pred_model, pred_data, pred_out;
    auto* pred_cmd = app.add_subcommand("predict", "score patients");
    pred_cmd->add_option("--model", pred_model)->required();
    pred_cmd->add_option("--data", pred_data)->required();
    pred_cmd->add_option("--out", pred_out)->required();

    auto* cv_cmd = app.add_subcommand("cv", "cross-validated evaluation");
    cv_cmd->add_option("--data", cv_data)->required();
    cv_cmd->add_option("--groups", cv_groups)->required();
    cv_cmd->add_option("--omega0", cv_omega0);
    cv_cmd->add_option("--out", cv_out);
    cv_cmd->add_option("--folds", folds)->check(CLI::Range(2, 1000));
    cv_cmd->add_option("--baseline", baselines)
        ->check(CLI::IsMember({"stl", "treffles-ablations"}));
    cv_cmd->add_option("--stl-l2", stl_l2, "ridge strength for the STL baseline");
    add_train_flags(cv_cmd, &cv_flags);

    SynthSpec spec;
    std::string spec_file, out_prefix;
    double omega_within = -1.0, omega_across = 0.0;
    Eigen::Index omega_blocks = 1;
    auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic data");
    sim_cmd->add_option("--tasks", spec.n_tasks);
    sim_cmd->add_option("--features", spec.n_features);
    sim_cmd->add_option("--groups", spec.n_groups);
    sim_cmd->add_option("--patients", spec.n_patients);
    sim_cmd->add_option("--sparsity", spec.sparsity);
    sim_cmd->add_option("--signal-scale", spec.signal_scale);
    sim_cmd->add_option("--feature-corr", spec.feature_corr);
    sim_cmd->add_option("--missing-rate", spec.missing_rate);
    sim_cmd->add_option("--omega-within", omega_within,
                        "block task covariance: within-block value");
    sim_cmd->add_option("--omega-across", omega_across);
    sim_cmd->add_option("--omega-blocks", omega_blocks);
    sim_cmd->add_option("--spec-file", spec_file);
    sim_cmd->add_option("--out-prefix", out_prefix)->required();

    std::string an_model;
    int clusters = 0, top = 5;
    bool by_magnitude = false;
    auto* an_cmd = app.add_subcommand("analyze", "post-hoc interpretation");
    an_cmd->add_option("--model", an_model)->required();
    an_cmd->add_option("--clusters", clusters);
    an_cmd->add_option("--top", top)->check(CLI::PositiveNumber);
    an_cmd->add_flag("--by-magnitude", by_magnitude,
                     "rank by |coefficient| instead of raw value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (fit_cmd->parsed()) {
            return cmd_fit(data_path, groups_path, omega0_path, out_path,
                           fit_flags, seed);
        }
        if (pred_cmd->parsed()) {
            return cmd_predict(pred_model, pred_data, pred_out);
        }
        if (cv_cmd->parsed()) {
            return cmd_cv(cv_data, cv_groups, cv_omega0, cv_out, folds,
                          baselines, cv_flags, seed, threads, stl_l2);
        }
        if (sim_cmd->parsed()) {
            spec.seed = seed;
            if (!spec_file.empty()) load_spec_file(spec_file, &spec);
            if (omega_within >= 0.0) {
                spec.omega_true = SynthSpec::block_omega(
                    spec.n_tasks, omega_blocks, omega_within, omega_across);
            }
            return cmd_simulate(spec, out_prefix);
        }
        if (an_cmd->parsed()) {
            return cmd_analyze(an_model, clusters, top, by_magnitude);
        }
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NonPSD& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DegenerateTrace& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
