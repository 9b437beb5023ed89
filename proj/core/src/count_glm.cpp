#include "gcspde/count_glm.hpp"

#include <cmath>
#include <stdexcept>

#include "gcspde/errors.hpp"
#include "gcspde/special_functions.hpp"

namespace gcspde {

double poisson_logpmf(int y, double mean) {
  if (y < 0) throw std::invalid_argument("poisson_logpmf: y must be non-negative");
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("poisson_logpmf: mean must be positive and finite");
  return y * std::log(mean) - mean - std::lgamma(y + 1.0);
}

double nb_logpmf(int y, double mean, double size) {
  if (y < 0) throw std::invalid_argument("nb_logpmf: y must be non-negative");
  if (!(mean > 0.0) || !(size > 0.0))
    throw std::invalid_argument("nb_logpmf: mean and size must be positive");
  return std::lgamma(y + size) - std::lgamma(size) - std::lgamma(y + 1.0) +
         size * std::log(size / (size + mean)) + y * std::log(mean / (size + mean));
}

Eigen::VectorXd poisson_irls(const Eigen::VectorXi& y, const Eigen::MatrixXd& design,
                             int max_iter, double tol) {
  const auto n = design.rows();
  const auto p = design.cols();
  if (y.size() != n) throw std::invalid_argument("poisson_irls: y/design size mismatch");
  if (n < p) throw InputError("poisson_irls: fewer observations than coefficients");

  const double ybar = y.cast<double>().mean();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = std::log(ybar + 0.1);

  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd eta = design * beta;
    const Eigen::VectorXd mu = eta.array().exp();
    if (!mu.allFinite()) throw NumericalError("poisson_irls: diverged (non-finite mean)");
    // Working response z = eta + (y - mu)/mu with weights mu.
    const Eigen::VectorXd z = eta + ((y.cast<double>() - mu).array() / mu.array()).matrix();
    const Eigen::MatrixXd wx = mu.asDiagonal() * design;
    const Eigen::MatrixXd xtwx = design.transpose() * wx;
    const Eigen::VectorXd xtwz = wx.transpose() * z;
    const Eigen::VectorXd beta_new = xtwx.ldlt().solve(xtwz);
    const double step = (beta_new - beta).cwiseAbs().maxCoeff();
    beta = beta_new;
    if (step < tol) return beta;
  }
  throw NonConvergenceError("poisson_irls: no convergence", max_iter, 0.0);
}

DispersionTestResult dean_lawless_test(const Eigen::VectorXi& y, const Eigen::VectorXd& mu_hat) {
  if (y.size() != mu_hat.size())
    throw std::invalid_argument("dean_lawless_test: y/mu_hat size mismatch");
  if (y.size() == 0) throw InputError("dean_lawless_test: empty data");
  if ((mu_hat.array() <= 0.0).any())
    throw std::invalid_argument("dean_lawless_test: fitted means must be positive");

  const double denom2 = 2.0 * mu_hat.squaredNorm();
  if (!(denom2 > 0.0)) throw std::invalid_argument("dean_lawless_test: zero denominator");

  const Eigen::ArrayXd r = y.cast<double>().array() - mu_hat.array();
  const double num = (r.square() - y.cast<double>().array()).sum();

  DispersionTestResult out;
  out.statistic = num / std::sqrt(denom2);
  out.p_value_one_sided = normal_upper_tail(out.statistic);
  out.fitted_means = mu_hat;
  return out;
}

DispersionTestResult dean_lawless_test(const Eigen::VectorXi& y, const Eigen::MatrixXd& design) {
  if (y.size() < 2) throw InputError("dean_lawless_test: need at least two observations");
  const Eigen::VectorXd beta = poisson_irls(y, design);
  const Eigen::VectorXd mu = (design * beta).array().exp();
  return dean_lawless_test(y, mu);
}

}  // namespace gcspde
