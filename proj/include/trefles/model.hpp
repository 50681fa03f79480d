#pragma once

// Correlated Horseshoe transform, effective coefficients, risk prediction.

#include <Eigen/Dense>

#include "trefles/types.hpp"

namespace trefles {

// Overflow-safe logistic.
double sigmoid(double t);

// log(1 + exp(x)) without overflow.
double softplus(double x);

// Standard-normal-style CDF with variance omega_kk:
// 0.5 * (1 + erf(u / sqrt(2 * omega_kk))).
double gauss_cdf(double u_val, double omega_kk);

// Local shrinkage scale tan(pi * Phi(u)/2), clamped to
// [kLambdaMin, kLambdaMax]. Marginally half-Cauchy when u ~ N(0, omega_kk).
double lambda_from_u(double u_val, double omega_kk);

// d lambda / d u at u_val: (pi/2) * sec^2(pi*Phi/2) * N(u; 0, omega_kk).
double lambda_deriv(double u_val, double omega_kk);

// Elementwise lambda_from_u, column k using omega(k, k).
Eigen::MatrixXd compute_lambda(const Eigen::MatrixXd& u,
                               const Eigen::MatrixXd& omega);

Eigen::MatrixXd compute_lambda_deriv(const Eigen::MatrixXd& u,
                                     const Eigen::MatrixXd& omega);

// beta = tau * Lambda o W, with W row-assembled from the blocks.
Eigen::MatrixXd compute_beta(const ModelParams& params,
                             const FeatureGrouping& grouping);

// sigma(beta . x), clamped into the open unit interval.
double predict_risk(const Eigen::VectorXd& beta_col, const Eigen::VectorXd& x);

// N x K risk matrix. Applies the model's standardizer first.
Eigen::MatrixXd predict_all(const FittedModel& model,
                            const Eigen::MatrixXd& features);

}  // namespace trefles
