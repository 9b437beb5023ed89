#include "gcspde/latent_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gcspde/count_glm.hpp"
#include "gcspde/errors.hpp"
#include "gcspde/gamma_count.hpp"
#include "gcspde/special_functions.hpp"

namespace gcspde {

const char* likelihood_name(Likelihood lik) {
  switch (lik) {
    case Likelihood::GammaCount: return "gc";
    case Likelihood::Poisson: return "poisson";
    case Likelihood::NegBinomial: return "nb";
  }
  return "?";
}

Likelihood likelihood_from_name(const std::string& name) {
  if (name == "gc") return Likelihood::GammaCount;
  if (name == "poisson") return Likelihood::Poisson;
  if (name == "nb") return Likelihood::NegBinomial;
  throw InputError("unknown likelihood '" + name + "' (expected gc, poisson, nb)");
}

const Eigen::SparseMatrix<double>& LatentModel::combined() const {
  if (combined_.rows() == 0) {
    const Eigen::Index n = n_obs(), p = n_fixed();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(n * p + projector.nonZeros());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) trips.emplace_back(i, j, design(i, j));
    }
    for (int k = 0; k < projector.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(projector, k); it; ++it) {
        trips.emplace_back(it.row(), p + it.col(), it.value());
      }
    }
    combined_.resize(n, latent_size());
    combined_.setFromTriplets(trips.begin(), trips.end());
    combined_.makeCompressed();
  }
  return combined_;
}

void LatentModel::validate() const {
  if (y.size() == 0) throw InputError("LatentModel: no observations");
  if (design.rows() != y.size()) throw InputError("LatentModel: design/y size mismatch");
  if (projector.rows() != y.size()) throw InputError("LatentModel: projector/y size mismatch");
  if (projector.cols() != fem.size()) throw InputError("LatentModel: projector/fem size mismatch");
  if ((y.array() < 0).any()) throw InputError("LatentModel: negative counts");
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    if (design(i, 0) != 1.0) throw InputError("LatentModel: design must carry an intercept column");
  }
}

double ObsLikelihood::logpmf(int y, double eta) const {
  switch (family) {
    case Likelihood::Poisson:
      return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
    case Likelihood::NegBinomial: {
      const double mu = std::exp(eta);
      if (!std::isfinite(mu) || mu <= 0.0) return kLogZero;
      return nb_logpmf(y, mu, dispersion);
    }
    case Likelihood::GammaCount: {
      const double gamma = dispersion * std::exp(eta);
      if (!std::isfinite(gamma) || gamma <= 0.0) return kLogZero;
      return gc_logpmf(y, {dispersion, gamma, 1.0});
    }
  }
  return kLogZero;
}

double ObsLikelihood::dlogpmf(int y, double eta) const {
  switch (family) {
    case Likelihood::Poisson:
      return y - std::exp(eta);
    case Likelihood::NegBinomial: {
      const double mu = std::exp(eta);
      return y - (y + dispersion) * mu / (dispersion + mu);
    }
    case Likelihood::GammaCount: {
      const auto d = gc_logpmf_deta(y, dispersion, eta);
      return d ? *d : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ObsLikelihood::d2logpmf(int y, double eta) const {
  switch (family) {
    case Likelihood::Poisson:
      return -std::exp(eta);
    case Likelihood::NegBinomial: {
      const double mu = std::exp(eta);
      const double s = dispersion;
      return -(y + s) * s * mu / ((s + mu) * (s + mu));
    }
    case Likelihood::GammaCount: {
      const double h = 1e-4 * std::max(1.0, std::fabs(eta));
      const auto up = gc_logpmf_deta(y, dispersion, eta + h);
      const auto dn = gc_logpmf_deta(y, dispersion, eta - h);
      if (!up || !dn) return -1e-8;
      return (*up - *dn) / (2.0 * h);
    }
  }
  return -1e-8;
}

double ObsLikelihood::cdf_below(int y, double eta) const {
  if (y <= 0) return 0.0;
  switch (family) {
    case Likelihood::Poisson: {
      // P(Y < y) = 1 - G(y, lambda) via the renewal duality.
      return 1.0 - reg_lower_incomplete_gamma(y, std::exp(eta));
    }
    case Likelihood::GammaCount: {
      const double gamma = dispersion * std::exp(eta);
      return gc_cdf_below(y, {dispersion, gamma, 1.0});
    }
    case Likelihood::NegBinomial: {
      const double mu = std::exp(eta);
      double cum = 0.0;
      for (int k = 0; k < y; ++k) cum += std::exp(nb_logpmf(k, mu, dispersion));
      return std::min(cum, 1.0);
    }
  }
  return 0.0;
}

double ObsLikelihood::pmf_at(int y, double eta) const {
  const double lp = logpmf(y, eta);
  return lp <= kLogZero ? 0.0 : std::exp(lp);
}

double log_hyperprior(const LatentModel& model, const Eigen::VectorXd& theta) {
  const double lt = model.theta_log_tau(theta);
  const double lk = model.theta_log_kappa(theta);
  double lp = 0.0;

  if (const auto* ln = std::get_if<FieldPriorLogNormal>(&model.priors.field_prior)) {
    auto normal_logpdf = [](double x, double mean, double var) {
      return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
    };
    lp += normal_logpdf(lt, ln->log_tau_mean, ln->log_tau_var);
    lp += normal_logpdf(lk, ln->log_kappa_mean, ln->log_kappa_var);
  } else {
    const auto& pc = std::get<PcPriorSpec>(model.priors.field_prior);
    const double tau = std::exp(lt), kappa = std::exp(lk);
    const double sigma = std::sqrt(tau_to_sigma2(tau, kappa, 1.0));
    const double range = kappa_to_range(kappa, 1.0);
    // Change of variables (sigma, range) -> (log tau, log kappa): |J| = sigma * range.
    lp += pc_prior_logdensity(sigma, range, pc) + std::log(sigma) + std::log(range);
  }

  if (model.likelihood == Likelihood::GammaCount) {
    const double a = model.priors.alpha_shape, b = model.priors.alpha_rate;
    const double t = theta(0);  // log alpha, Jacobian folded in
    lp += a * std::log(b) - std::lgamma(a) + a * t - b * std::exp(t);
  } else if (model.likelihood == Likelihood::NegBinomial) {
    const double v = model.priors.nb_size_logvar;
    const double d = theta(0) - model.priors.nb_size_logmean;
    lp += -0.5 * std::log(2.0 * M_PI * v) - 0.5 * d * d / v;
  }
  return lp;
}

}  // namespace gcspde
