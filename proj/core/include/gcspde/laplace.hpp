#pragma once

#include <Eigen/Sparse>
#include <optional>

#include "gcspde/errors.hpp"
#include "gcspde/latent_model.hpp"

namespace gcspde {

/// Gaussian approximation of pi(psi | y, theta) at its mode.
struct GaussianApprox {
  Eigen::VectorXd mode;         // (beta, phi)
  Eigen::VectorXd eta;          // linear predictor at the mode
  SparsePrecision precision;    // B' W B + prior precision
  double log_det_precision = 0.0;
  double loglik = 0.0;          // sum_i log pmf at the mode
  double prior_quad = 0.0;      // mode' P mode
  double log_det_prior = 0.0;   // log det of the latent prior precision
  int iterations = 0;
};

class GaussianApproxError : public NonConvergenceError {
 public:
  GaussianApproxError(const std::string& what, int iterations, double gradient_norm,
                      Eigen::VectorXd last_iterate)
      : NonConvergenceError(what, iterations, gradient_norm),
        last_iterate(std::move(last_iterate)) {}
  Eigen::VectorXd last_iterate;
};

/// Latent prior precision blkdiag(I_p / beta_variance, Q(theta)).
SparsePrecision latent_prior_precision(const LatentModel& model, const Eigen::VectorXd& theta,
                                       double* log_det = nullptr);

/// Damped Newton maximization of log pi(y | psi, theta) + log pi(psi | theta).
/// Converges when the gradient sup-norm drops below 1e-6 and the relative
/// objective change below 1e-9; throws GaussianApproxError after 100
/// iterations.
GaussianApprox gaussian_approx(const LatentModel& model, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd* warm_start = nullptr);

/// Unnormalized nested-Laplace log posterior of the hyperparameters:
/// log pi(y, psi*, theta) - log pi_G(psi* | y, theta).
double log_hyper_posterior(const LatentModel& model, const Eigen::VectorXd& theta);
double log_hyper_posterior(const LatentModel& model, const Eigen::VectorXd& theta,
                           const GaussianApprox& approx);

/// Marginal standard deviations diag(H^{-1})^{1/2} of a sparse SPD precision
/// matrix via the Takahashi recurrences on its LDL^T factor.
Eigen::VectorXd marginal_sd_from_precision(const SparsePrecision& h);

}  // namespace gcspde
