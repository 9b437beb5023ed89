#include "gcspde/spde.hpp"

#include <cmath>
#include <stdexcept>

namespace gcspde {

MaternParams matern_from_range_sigma2(double range, double sigma2, double nu) {
  MaternParams p;
  p.nu = nu;
  p.sigma2 = sigma2;
  p.range = range;
  p.kappa = range_to_kappa(range, nu);
  p.tau_spde = sigma2_to_tau(sigma2, p.kappa, nu);
  return p;
}

double matern_cov(double distance, const MaternParams& params) {
  if (distance < 0.0) throw std::invalid_argument("matern_cov: negative distance");
  if (distance == 0.0) return params.sigma2;
  const double kh = params.kappa * distance;
  const double nu = params.nu;
  return params.sigma2 / (std::pow(2.0, nu - 1.0) * std::tgamma(nu)) * std::pow(kh, nu) *
         std::cyl_bessel_k(nu, kh);
}

double range_to_kappa(double range, double nu) {
  if (!(range > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("range_to_kappa: inputs must be positive");
  return std::sqrt(8.0 * nu) / range;
}

double kappa_to_range(double kappa, double nu) {
  if (!(kappa > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("kappa_to_range: inputs must be positive");
  return std::sqrt(8.0 * nu) / kappa;
}

double sigma2_to_tau(double sigma2, double kappa, double nu, int d) {
  if (!(sigma2 > 0.0) || !(kappa > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("sigma2_to_tau: inputs must be positive");
  const double zeta = nu + 0.5 * d;
  const double tau2 = std::tgamma(nu) /
                      (std::tgamma(zeta) * std::pow(4.0 * M_PI, 0.5 * d) *
                       std::pow(kappa, 2.0 * nu) * sigma2);
  return std::sqrt(tau2);
}

double tau_to_sigma2(double tau, double kappa, double nu, int d) {
  if (!(tau > 0.0) || !(kappa > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("tau_to_sigma2: inputs must be positive");
  const double zeta = nu + 0.5 * d;
  return std::tgamma(nu) / (std::tgamma(zeta) * std::pow(4.0 * M_PI, 0.5 * d) *
                            std::pow(kappa, 2.0 * nu) * tau * tau);
}

SparsePrecision precision_matrix(const FemMatrices& fem, double kappa, double tau_spde) {
  if (!(kappa > 0.0) || !(tau_spde > 0.0))
    throw std::invalid_argument("precision_matrix: kappa and tau must be positive");
  const double t2 = tau_spde * tau_spde;
  const double k2 = kappa * kappa;
  SparsePrecision q = (t2 * k2 * k2) *
                          SparsePrecision(fem.c_tilde.asDiagonal()) +
                      (2.0 * t2 * k2) * fem.g + t2 * fem.g_c_inv_g;
  q.makeCompressed();
  return q;
}

PrecisionFactor::PrecisionFactor(const SparsePrecision& q) {
  ldlt_.compute(q);
  if (ldlt_.info() != Eigen::Success || ldlt_.vectorD().minCoeff() <= 0.0)
    throw NotPositiveDefiniteError("sparse Cholesky failed: matrix not positive definite");
  log_det_ = ldlt_.vectorD().array().log().sum();
}

Eigen::VectorXd PrecisionFactor::sample_from_standard_normals(const Eigen::VectorXd& z) const {
  // P Q P' = L D L'  =>  x = P' L'^{-1} D^{-1/2} z has covariance Q^{-1}.
  const Eigen::VectorXd w = z.array() / ldlt_.vectorD().array().sqrt();
  const Eigen::VectorXd u = ldlt_.matrixU().solve(w);
  return ldlt_.permutationPinv() * u;
}

void PcPriorSpec::validate() const {
  if (!(sigma0 > 0.0) || !(r0 > 0.0) || !(q1 > 0.0) || !(q1 < 1.0) || !(q2 > 0.0) || !(q2 < 1.0))
    throw std::invalid_argument("PcPriorSpec: require sigma0, r0 > 0 and q1, q2 in (0,1)");
}

double pc_prior_logdensity(double sigma, double range, const PcPriorSpec& spec) {
  spec.validate();
  if (!(sigma > 0.0) || !(range > 0.0))
    throw std::invalid_argument("pc_prior_logdensity: sigma and range must be positive");
  const double lambda_sigma = -std::log(spec.q1) / spec.sigma0;
  const double lambda_range = -std::log(spec.q2) * spec.r0;
  return std::log(lambda_sigma) - lambda_sigma * sigma + std::log(lambda_range) -
         2.0 * std::log(range) - lambda_range / range;
}

}  // namespace gcspde
