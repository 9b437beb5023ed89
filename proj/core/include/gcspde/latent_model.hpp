#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <variant>

#include "gcspde/fem.hpp"
#include "gcspde/spde.hpp"

namespace gcspde {

enum class Likelihood { GammaCount, Poisson, NegBinomial };

const char* likelihood_name(Likelihood lik);
Likelihood likelihood_from_name(const std::string& name);

/// Independent log-normal priors on the SPDE scale parameters.
struct FieldPriorLogNormal {
  double log_tau_mean = std::log(0.02);
  double log_tau_var = 10.0;
  double log_kappa_mean = std::log(14.0);
  double log_kappa_var = 10.0;
};

struct PriorSpec {
  double alpha_shape = 0.01;  // Gamma(shape, rate) prior on the GC dispersion
  double alpha_rate = 0.01;
  double beta_variance = 1000.0;
  double nb_size_logmean = 0.0;  // log-normal prior on the NB size
  double nb_size_logvar = 10.0;
  std::variant<FieldPriorLogNormal, PcPriorSpec> field_prior = FieldPriorLogNormal{};
};

/// Latent Gaussian count model: eta = X beta + A phi with phi an SPDE GMRF.
/// Latent vector psi = (beta, phi) of size p + m.
struct LatentModel {
  Likelihood likelihood = Likelihood::GammaCount;
  Eigen::VectorXi y;                      // counts, length n
  Eigen::MatrixXd design;                 // n x p, first column all ones
  Eigen::SparseMatrix<double> projector;  // n x m barycentric rows
  FemMatrices fem;
  PriorSpec priors;
  double init_range_guess = 1.0;  // extent-based initializer for the NM search

  Eigen::Index n_obs() const { return y.size(); }
  Eigen::Index n_fixed() const { return design.cols(); }
  Eigen::Index n_field() const { return fem.size(); }
  Eigen::Index latent_size() const { return n_fixed() + n_field(); }

  /// [X | A], built once.
  const Eigen::SparseMatrix<double>& combined() const;

  void validate() const;

  /// Hyperparameter layout: (log dispersion,) log tau, log kappa. Poisson
  /// has no dispersion entry.
  int theta_dim() const { return likelihood == Likelihood::Poisson ? 2 : 3; }
  double theta_log_tau(const Eigen::VectorXd& theta) const {
    return theta(theta_dim() - 2);
  }
  double theta_log_kappa(const Eigen::VectorXd& theta) const {
    return theta(theta_dim() - 1);
  }
  /// GC alpha or NB size; 1.0 for Poisson.
  double theta_dispersion(const Eigen::VectorXd& theta) const {
    return likelihood == Likelihood::Poisson ? 1.0 : std::exp(theta(0));
  }

 private:
  mutable Eigen::SparseMatrix<double> combined_;
};

/// Per-observation likelihood kernel at a given hyperparameter setting.
struct ObsLikelihood {
  Likelihood family = Likelihood::Poisson;
  double dispersion = 1.0;

  double logpmf(int y, double eta) const;
  /// First derivative wrt eta; NaN when the pmf degenerates there.
  double dlogpmf(int y, double eta) const;
  /// Second derivative wrt eta (finite differences of dlogpmf for GC).
  double d2logpmf(int y, double eta) const;
  double cdf_below(int y, double eta) const;
  double pmf_at(int y, double eta) const;
};

/// Log prior density of theta (log-scale parameters, Jacobians included).
double log_hyperprior(const LatentModel& model, const Eigen::VectorXd& theta);

}  // namespace gcspde
