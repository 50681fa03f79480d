#include "trefles/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "trefles/model.hpp"

namespace trefles {

double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
    const size_t n = labels.size();
    if (static_cast<size_t>(scores.size()) != n) {
        throw DimensionMismatch("auc: scores/labels length mismatch");
    }
    size_t n_pos = 0;
    for (int c : labels) {
        if (c == 1) ++n_pos;
    }
    const size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DegenerateLabels("auc: one class absent");
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores(static_cast<Eigen::Index>(a)) < scores(static_cast<Eigen::Index>(b)); });
    // Average ranks over tied score runs, then Mann-Whitney U.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n &&
               scores(static_cast<Eigen::Index>(order[j + 1])) ==
                   scores(static_cast<Eigen::Index>(order[i]))) {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t t = i; t <= j; ++t) {
            if (labels[order[t]] == 1) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double u = rank_sum_pos -
                     static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<int> assign_folds(const Dataset& data, int folds,
                              std::uint64_t seed) {
    const Eigen::Index n = data.n_patients();
    const Eigen::Index k = data.n_tasks();
    // Stratify on the task with the fewest positives so its classes spread
    // as evenly as possible.
    Eigen::Index rare_task = 0;
    Eigen::Index rare_pos = std::numeric_limits<Eigen::Index>::max();
    for (Eigen::Index kk = 0; kk < k; ++kk) {
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (data.labels(i, kk) == 1) ++pos;
        }
        if (pos < rare_pos) {
            rare_pos = pos;
            rare_task = kk;
        }
    }
    std::vector<int> strata[3];  // pos, neg, missing for the rare task
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = k > 0 ? data.labels(i, rare_task) : kLabelMissing;
        strata[c == 1 ? 0 : (c == 0 ? 1 : 2)].push_back(static_cast<int>(i));
    }
    std::mt19937_64 rng(seed);
    std::vector<int> assignment(static_cast<size_t>(n), 0);
    int next_fold = 0;
    for (auto& s : strata) {
        std::shuffle(s.begin(), s.end(), rng);
        for (int row : s) {
            assignment[static_cast<size_t>(row)] = next_fold;
            next_fold = (next_fold + 1) % folds;
        }
    }
    return assignment;
}

namespace {

struct FoldResult {
    std::vector<double> task_aucs;  // K entries
};

void check_fold_feasible(const Dataset& data, const std::vector<int>& folds,
                         int fold, int n_folds) {
    for (Eigen::Index kk = 0; kk < data.n_tasks(); ++kk) {
        int train_pos = 0, train_neg = 0, test_pos = 0, test_neg = 0;
        for (Eigen::Index i = 0; i < data.n_patients(); ++i) {
            const int c = data.labels(i, kk);
            if (c == kLabelMissing) continue;
            const bool held_out = folds[static_cast<size_t>(i)] == fold;
            if (c == 1) ++(held_out ? test_pos : train_pos);
            else ++(held_out ? test_neg : train_neg);
        }
        if (train_pos == 0 || train_neg == 0 || test_pos == 0 || test_neg == 0) {
            throw InfeasibleStratification(
                "cv: task '" + data.task_names[static_cast<size_t>(kk)] +
                "' single-class in fold " + std::to_string(fold) + " of " +
                std::to_string(n_folds));
        }
    }
}

FoldResult run_fold(const Dataset& data, const FeatureGrouping& grouping,
                    const Hyperparams& hyper, const TrainConfig& config,
                    const CvOptions& options, const std::vector<int>& folds,
                    int fold) {
    std::vector<int> train_rows, test_rows;
    for (Eigen::Index i = 0; i < data.n_patients(); ++i) {
        (folds[static_cast<size_t>(i)] == fold ? test_rows : train_rows)
            .push_back(static_cast<int>(i));
    }
    Dataset train = data.subset(train_rows);
    Dataset test = data.subset(test_rows);

    TrainConfig fold_config = config;
    fold_config.seed = config.seed * 1000003ull + static_cast<std::uint64_t>(fold);

    Eigen::MatrixXd scores;
    if (options.method == CvMethod::Trefles) {
        auto [model, report] = fit_standardized(train, grouping, hyper,
                                                fold_config, options.standardize);
        scores = predict_all(model, test.features);
    } else {
        Standardizer scaler = options.standardize
                                  ? Standardizer::fit(train.features)
                                  : Standardizer{};
        Dataset strain = train;
        strain.features = scaler.apply(train.features);
        const Eigen::MatrixXd xtest = scaler.apply(test.features);
        scores.resize(test.n_patients(), test.n_tasks());
        for (Eigen::Index kk = 0; kk < data.n_tasks(); ++kk) {
            const Eigen::VectorXd w =
                stl_fit(strain, kk, options.stl_l2, fold_config);
            scores.col(kk) = xtest * w;
        }
    }

    FoldResult result;
    for (Eigen::Index kk = 0; kk < data.n_tasks(); ++kk) {
        std::vector<int> labels;
        std::vector<double> s;
        for (Eigen::Index i = 0; i < test.n_patients(); ++i) {
            const int c = test.labels(i, kk);
            if (c == kLabelMissing) continue;
            labels.push_back(c);
            s.push_back(scores(i, kk));
        }
        Eigen::VectorXd sv =
            Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
        result.task_aucs.push_back(auc(sv, labels));
    }
    return result;
}

}  // namespace

CvReport kfold_cv(const Dataset& data, const FeatureGrouping& grouping,
                  const Hyperparams& hyper, const TrainConfig& config,
                  const CvOptions& options) {
    if (options.folds < 2) {
        throw ValidationError("cv: folds must be >= 2");
    }
    data.validate();
    const std::vector<int> folds = assign_folds(data, options.folds, options.seed);
    for (int f = 0; f < options.folds; ++f) {
        check_fold_feasible(data, folds, f, options.folds);
    }

    std::vector<FoldResult> results(static_cast<size_t>(options.folds));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(options.folds));
    const int threads =
        options.threads > 0 ? std::min(options.threads, options.folds)
                            : options.folds;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int f = t; f < options.folds; f += threads) {
                try {
                    results[static_cast<size_t>(f)] = run_fold(
                        data, grouping, hyper, config, options, folds, f);
                } catch (...) {
                    errors[static_cast<size_t>(f)] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    CvReport report;
    report.folds = options.folds;
    report.seed = options.seed;
    std::vector<double> all;
    for (Eigen::Index kk = 0; kk < data.n_tasks(); ++kk) {
        CvTaskReport tr;
        tr.task_name = data.task_names[static_cast<size_t>(kk)];
        for (const auto& fr : results) {
            tr.fold_aucs.push_back(fr.task_aucs[static_cast<size_t>(kk)]);
            all.push_back(fr.task_aucs[static_cast<size_t>(kk)]);
        }
        const double mean =
            std::accumulate(tr.fold_aucs.begin(), tr.fold_aucs.end(), 0.0) /
            static_cast<double>(tr.fold_aucs.size());
        double var = 0.0;
        for (double a : tr.fold_aucs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(tr.fold_aucs.size());
        tr.mean_auc = mean;
        tr.std_auc = std::sqrt(var);
        report.per_task.push_back(std::move(tr));
    }
    const double mean = std::accumulate(all.begin(), all.end(), 0.0) /
                        static_cast<double>(all.size());
    double var = 0.0;
    for (double a : all) var += (a - mean) * (a - mean);
    report.overall_mean = mean;
    report.overall_std = std::sqrt(var / static_cast<double>(all.size()));
    return report;
}

std::string format_cv_table(const std::vector<std::string>& method_names,
                            const std::vector<CvReport>& reports) {
    std::ostringstream os;
    os << "task";
    for (const auto& name : method_names) os << "\t" << name;
    os << "\n";
    const size_t n_tasks = reports.empty() ? 0 : reports[0].per_task.size();
    char buf[64];
    for (size_t t = 0; t < n_tasks; ++t) {
        os << reports[0].per_task[t].task_name;
        for (const auto& r : reports) {
            std::snprintf(buf, sizeof(buf), "%.4f (%.4f)",
                          r.per_task[t].mean_auc, r.per_task[t].std_auc);
            os << "\t" << buf;
        }
        os << "\n";
    }
    os << "overall";
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%.4f (%.4f)", r.overall_mean,
                      r.overall_std);
        os << "\t" << buf;
    }
    os << "\n";
    return os.str();
}

}  // namespace trefles
