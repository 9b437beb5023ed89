#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gcspde/laplace.hpp"

namespace gcspde {

struct HyperPoint {
  Eigen::VectorXd theta;
  double log_posterior = 0.0;
  double weight = 0.0;
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
};

struct FitOptions {
  double grid_step = 0.75;     // grid spacing in posterior-sd units
  double grid_log_drop = 6.0;  // drop grid points this far below the mode
  int max_grid_points = 600;
  int nm_max_iter = 300;
  int scoring_draws = 1000;
  uint64_t seed = 1;
};

struct FitResult {
  std::vector<HyperPoint> grid;
  int modal_index = 0;
  std::vector<Eigen::VectorXd> modes;  // latent mode per grid point
  std::vector<Eigen::VectorXd> sds;    // latent marginal sd per grid point
  std::vector<Eigen::VectorXd> etas;
  Eigen::VectorXd latent_mean;
  Eigen::VectorXd latent_sd;
  Eigen::MatrixXd loglik_draws;  // n x S, posterior-draw log-likelihoods
  Eigen::MatrixXd cdf_draws;     // n x S, P(Y < y_i) per draw
  Eigen::MatrixXd pmf_draws;     // n x S, P(Y = y_i) per draw
  Eigen::VectorXd loglik_at_mean;
  std::vector<ParamSummary> summaries;
};

/// Mode search (Nelder-Mead) on the hyper posterior, then a regular grid in
/// the eigenbasis of the negative Hessian at the mode; points falling
/// grid_log_drop below the mode are discarded and weights normalized.
std::vector<HyperPoint> explore_hyper_grid(const LatentModel& model,
                                           const Eigen::VectorXd& init,
                                           const FitOptions& opts = {});

/// Gaussian-mixture moments across grid points.
std::pair<Eigen::VectorXd, Eigen::VectorXd> latent_marginals(
    const std::vector<HyperPoint>& grid, const std::vector<Eigen::VectorXd>& modes,
    const std::vector<Eigen::VectorXd>& sds);

/// Full fit: grid exploration, latent marginals, posterior draws for
/// scoring, and parameter summaries.
FitResult fit_model(const LatentModel& model, const FitOptions& opts = {});
FitResult fit_model(const LatentModel& model, const FitOptions& opts,
                    const Eigen::VectorXd& init_theta);

struct PredictResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Posterior mean and sd of the linear predictor eta at new rows
/// (design_pred, projector_pred), mixed over the hyper grid.
PredictResult predict_eta(const LatentModel& model, const FitResult& fit,
                          const Eigen::MatrixXd& design_pred,
                          const Eigen::SparseMatrix<double>& projector_pred);

/// Default hyperparameter initializer from the model's extent heuristic.
Eigen::VectorXd default_init_theta(const LatentModel& model);

}  // namespace gcspde
