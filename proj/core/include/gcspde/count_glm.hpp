#pragma once

#include <Eigen/Dense>

namespace gcspde {

/// log Poisson pmf at y with the given mean.
double poisson_logpmf(int y, double mean);

/// log negative-binomial pmf in the (mean, size) parameterization:
/// variance = mean + mean^2 / size; converges to Poisson as size -> inf.
double nb_logpmf(int y, double mean, double size);

struct DispersionTestResult {
  double statistic = 0.0;
  double p_value_one_sided = 1.0;
  Eigen::VectorXd fitted_means;
};

/// Maximum-likelihood Poisson regression fit (log link) via IRLS.
/// `design` must carry the intercept column. Returns the coefficient vector.
Eigen::VectorXd poisson_irls(const Eigen::VectorXi& y, const Eigen::MatrixXd& design,
                             int max_iter = 100, double tol = 1e-10);

/// Dean-Lawless score test of Poisson against mixed-Poisson alternatives:
/// T = sum((y_i - mu_i)^2 - y_i) / sqrt(2 sum mu_i^2), one-sided p-value
/// from the standard normal upper tail (H1: mixing variance > 0).
DispersionTestResult dean_lawless_test(const Eigen::VectorXi& y, const Eigen::VectorXd& mu_hat);

/// Convenience: fit the Poisson GLM, then run the test on its fitted means.
DispersionTestResult dean_lawless_test(const Eigen::VectorXi& y, const Eigen::MatrixXd& design);

}  // namespace gcspde
