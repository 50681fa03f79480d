#include "trefles/model.hpp"

#include <cmath>
#include <limits>

namespace trefles {

double sigmoid(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double gauss_cdf(double u_val, double omega_kk) {
    return 0.5 * (1.0 + std::erf(u_val / std::sqrt(2.0 * omega_kk)));
}

double lambda_from_u(double u_val, double omega_kk) {
    const double phi = gauss_cdf(u_val, omega_kk);
    double lam = std::tan(0.5 * M_PI * phi);
    if (!(lam > kLambdaMin)) lam = kLambdaMin;  // also catches tan wrap to <= 0
    if (lam > kLambdaMax) lam = kLambdaMax;
    return lam;
}

double lambda_deriv(double u_val, double omega_kk) {
    const double phi = gauss_cdf(u_val, omega_kk);
    const double c = std::cos(0.5 * M_PI * phi);
    const double sec2 = 1.0 / (c * c);
    const double pdf = std::exp(-u_val * u_val / (2.0 * omega_kk)) /
                       std::sqrt(2.0 * M_PI * omega_kk);
    double d = 0.5 * M_PI * sec2 * pdf;
    if (!std::isfinite(d)) d = 0.0;  // lambda is clamped out there anyway
    return d;
}

Eigen::MatrixXd compute_lambda(const Eigen::MatrixXd& u,
                               const Eigen::MatrixXd& omega) {
    Eigen::MatrixXd lam(u.rows(), u.cols());
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        const double okk = omega(k, k);
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            lam(j, k) = lambda_from_u(u(j, k), okk);
        }
    }
    return lam;
}

Eigen::MatrixXd compute_lambda_deriv(const Eigen::MatrixXd& u,
                                     const Eigen::MatrixXd& omega) {
    Eigen::MatrixXd d(u.rows(), u.cols());
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        const double okk = omega(k, k);
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            d(j, k) = lambda_deriv(u(j, k), okk);
        }
    }
    return d;
}

Eigen::MatrixXd compute_beta(const ModelParams& params,
                             const FeatureGrouping& grouping) {
    const Eigen::MatrixXd w = assemble_rows(params.w_blocks, grouping);
    const Eigen::MatrixXd lam = compute_lambda(params.u, params.omega);
    return params.tau * lam.cwiseProduct(w);
}

double predict_risk(const Eigen::VectorXd& beta_col, const Eigen::VectorXd& x) {
    double p = sigmoid(beta_col.dot(x));
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    if (p < lo) p = lo;
    if (p > hi) p = hi;
    return p;
}

Eigen::MatrixXd predict_all(const FittedModel& model,
                            const Eigen::MatrixXd& features) {
    if (features.cols() != model.beta.rows()) {
        throw DimensionMismatch("predict_all: feature dimension mismatch");
    }
    const Eigen::MatrixXd x = model.standardizer.apply(features);
    Eigen::MatrixXd scores = x * model.beta;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index k = 0; k < scores.cols(); ++k) {
            double p = sigmoid(scores(i, k));
            constexpr double lo = std::numeric_limits<double>::min();
            const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
            scores(i, k) = std::min(std::max(p, lo), hi);
        }
    }
    return scores;
}

}  // namespace trefles
