#pragma once

#include <Eigen/Sparse>
#include <random>

#include "gcspde/errors.hpp"
#include "gcspde/fem.hpp"

namespace gcspde {

/// Matern field parameters. The redundant fields are kept consistent via
/// the links r = sqrt(8 nu)/kappa and sigma^2 = Gamma(nu) /
/// (Gamma(nu + d/2) (4 pi)^{d/2} kappa^{2 nu} tau^2) with d = 2.
struct MaternParams {
  double sigma2 = 1.0;
  double nu = 1.0;
  double kappa = 1.0;
  double range = 1.0;
  double tau_spde = 1.0;
};

/// Builds a consistent parameter set from (range, marginal variance).
MaternParams matern_from_range_sigma2(double range, double sigma2, double nu = 1.0);

double matern_cov(double distance, const MaternParams& params);

double range_to_kappa(double range, double nu);
double kappa_to_range(double kappa, double nu);
double sigma2_to_tau(double sigma2, double kappa, double nu, int d = 2);
double tau_to_sigma2(double tau, double kappa, double nu, int d = 2);

using SparsePrecision = Eigen::SparseMatrix<double>;

/// GMRF precision Q = tau^2 (kappa^4 C + 2 kappa^2 G + G C^{-1} G) for the
/// smoothness-one SPDE field. Symmetric positive definite.
SparsePrecision precision_matrix(const FemMatrices& fem, double kappa, double tau_spde);

/// Sparse Cholesky of Q; throws NotPositiveDefiniteError on failure.
class PrecisionFactor {
 public:
  explicit PrecisionFactor(const SparsePrecision& q);

  double log_det() const { return log_det_; }
  Eigen::Index size() const { return ldlt_.rows(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }

  /// One draw from N(0, Q^{-1}).
  template <class Rng>
  Eigen::VectorXd sample(Rng& rng) const {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd z(size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
    return sample_from_standard_normals(z);
  }

  Eigen::VectorXd sample_from_standard_normals(const Eigen::VectorXd& z) const;

 private:
  Eigen::SimplicialLDLT<SparsePrecision> ldlt_;
  double log_det_ = 0.0;
};

template <class Rng>
Eigen::VectorXd sample_gmrf(const SparsePrecision& q, Rng& rng) {
  PrecisionFactor f(q);
  return f.sample(rng);
}

/// Penalized-complexity prior on (sigma, range), defined by the tail
/// statements P(sigma > sigma0) = q1 and P(range < r0) = q2.
struct PcPriorSpec {
  double sigma0 = 1.0;
  double q1 = 0.05;
  double r0 = 1.0;
  double q2 = 0.05;

  void validate() const;
};

/// Joint log-density: exponential in sigma with rate -log(q1)/sigma0 and
/// inverse-range exponential with rate -log(q2)*r0.
double pc_prior_logdensity(double sigma, double range, const PcPriorSpec& spec);

}  // namespace gcspde
