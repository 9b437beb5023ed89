#include "gcspde/laplace.hpp"

#include <cmath>
#include <vector>

#include "gcspde/special_functions.hpp"

namespace gcspde {

SparsePrecision latent_prior_precision(const LatentModel& model, const Eigen::VectorXd& theta,
                                       double* log_det) {
  const Eigen::Index p = model.n_fixed();
  const Eigen::Index s = model.latent_size();
  const double tau = std::exp(model.theta_log_tau(theta));
  const double kappa = std::exp(model.theta_log_kappa(theta));
  const SparsePrecision q = precision_matrix(model.fem, kappa, tau);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(p + q.nonZeros());
  for (Eigen::Index i = 0; i < p; ++i) {
    trips.emplace_back(i, i, 1.0 / model.priors.beta_variance);
  }
  for (int k = 0; k < q.outerSize(); ++k) {
    for (SparsePrecision::InnerIterator it(q, k); it; ++it) {
      trips.emplace_back(p + it.row(), p + it.col(), it.value());
    }
  }
  SparsePrecision full(s, s);
  full.setFromTriplets(trips.begin(), trips.end());
  full.makeCompressed();

  if (log_det != nullptr) {
    PrecisionFactor qf(q);
    *log_det = qf.log_det() - p * std::log(model.priors.beta_variance);
  }
  return full;
}

namespace {

struct LikEval {
  double loglik = 0.0;
  bool degenerate = false;
};

LikEval eval_loglik(const ObsLikelihood& lik, const Eigen::VectorXi& y,
                    const Eigen::VectorXd& eta) {
  LikEval out;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double lp = lik.logpmf(y(i), eta(i));
    if (lp <= kLogZero) out.degenerate = true;
    out.loglik += lp;
  }
  return out;
}

}  // namespace

GaussianApprox gaussian_approx(const LatentModel& model, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = model.n_obs();
  const Eigen::Index s = model.latent_size();
  const auto& b = model.combined();
  const Eigen::SparseMatrix<double> bt = b.transpose();

  double log_det_prior = 0.0;
  const SparsePrecision prior = latent_prior_precision(model, theta, &log_det_prior);
  const ObsLikelihood lik{model.likelihood, model.theta_dispersion(theta)};

  Eigen::VectorXd psi = (warm_start != nullptr && warm_start->size() == s)
                            ? *warm_start
                            : Eigen::VectorXd::Zero(s);

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& eta_out) {
    eta_out = b * x;
    const LikEval le = eval_loglik(lik, model.y, eta_out);
    return le.loglik - 0.5 * x.dot(prior.selfadjointView<Eigen::Lower>() * x);
  };

  Eigen::VectorXd eta;
  double obj = objective(psi, eta);
  if (!std::isfinite(obj) || obj < kLogZero / 2) {
    // A warm start from another theta can be degenerate here; restart cold.
    psi.setZero();
    obj = objective(psi, eta);
  }

  Eigen::SimplicialLDLT<SparsePrecision> solver;
  bool analyzed = false;
  Eigen::VectorXd u(n), w(n);
  double gnorm = 0.0;
  int iter = 0;
  for (; iter < 100; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d1 = lik.dlogpmf(model.y(i), eta(i));
      if (!std::isfinite(d1)) {
        throw GaussianApproxError("gaussian_approx: degenerate likelihood at accepted iterate",
                                  iter, gnorm, psi);
      }
      u(i) = d1;
      w(i) = std::max(-lik.d2logpmf(model.y(i), eta(i)), 1e-8);
    }
    const Eigen::VectorXd grad =
        bt * u - prior.selfadjointView<Eigen::Lower>() * psi;
    gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm < 1e-7 && iter == 0) break;

    SparsePrecision h = bt * w.asDiagonal() * b;
    h += prior;
    h.makeCompressed();
    if (!analyzed) {
      solver.analyzePattern(h);
      analyzed = true;
    }
    solver.factorize(h);
    if (solver.info() != Eigen::Success) {
      throw NotPositiveDefiniteError("gaussian_approx: indefinite curvature");
    }
    const Eigen::VectorXd delta = solver.solve(grad);

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd cand, eta_cand;
    double obj_cand = 0.0;
    for (int h_iter = 0; h_iter < 40; ++h_iter, step *= 0.5) {
      cand = psi + step * delta;
      obj_cand = objective(cand, eta_cand);
      if (std::isfinite(obj_cand) && obj_cand > obj) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (gnorm < 1e-4) break;  // flat to machine precision near the mode
      throw GaussianApproxError("gaussian_approx: no ascent step found", iter, gnorm, psi);
    }
    const double rel_change = std::fabs(obj_cand - obj) / (1.0 + std::fabs(obj_cand));
    psi = cand;
    eta = eta_cand;
    obj = obj_cand;
    if (gnorm < 1e-6 && rel_change < 1e-9) break;
    if (iter == 99) {
      throw GaussianApproxError("gaussian_approx: Newton did not converge", iter, gnorm, psi);
    }
  }

  GaussianApprox out;
  out.mode = psi;
  out.eta = eta;
  out.iterations = iter;
  out.log_det_prior = log_det_prior;
  out.prior_quad = psi.dot(prior.selfadjointView<Eigen::Lower>() * psi);
  out.loglik = eval_loglik(lik, model.y, eta).loglik;

  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = std::max(-lik.d2logpmf(model.y(i), eta(i)), 1e-8);
  }
  SparsePrecision h = bt * w.asDiagonal() * b;
  h += prior;
  h.makeCompressed();
  Eigen::SimplicialLDLT<SparsePrecision> final_solver(h);
  if (final_solver.info() != Eigen::Success || final_solver.vectorD().minCoeff() <= 0.0) {
    throw NotPositiveDefiniteError("gaussian_approx: posterior precision not PD at mode");
  }
  out.precision = std::move(h);
  out.log_det_precision = final_solver.vectorD().array().log().sum();
  return out;
}

double log_hyper_posterior(const LatentModel& model, const Eigen::VectorXd& theta,
                           const GaussianApprox& approx) {
  return approx.loglik + 0.5 * approx.log_det_prior - 0.5 * approx.prior_quad +
         log_hyperprior(model, theta) - 0.5 * approx.log_det_precision;
}

double log_hyper_posterior(const LatentModel& model, const Eigen::VectorXd& theta) {
  const GaussianApprox approx = gaussian_approx(model, theta);
  return log_hyper_posterior(model, theta, approx);
}

Eigen::VectorXd marginal_sd_from_precision(const SparsePrecision& h) {
  const Eigen::Index n = h.rows();
  Eigen::SimplicialLDLT<SparsePrecision> ldlt(h);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    throw NotPositiveDefiniteError("marginal_sd_from_precision: not positive definite");
  }
  const Eigen::SparseMatrix<double> l = ldlt.matrixL();
  const Eigen::VectorXd d = ldlt.vectorD();

  // Sigma = H^{-1} restricted to the factor pattern (strict lower of L plus
  // the diagonal), filled by the Takahashi recurrences from the last column
  // backwards.
  std::vector<std::vector<int>> rows(n);
  std::vector<std::vector<double>> lvals(n);
  for (int j = 0; j < n; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(l, j); it; ++it) {
      if (it.row() > j) {
        rows[j].push_back(static_cast<int>(it.row()));
        lvals[j].push_back(it.value());
      }
    }
  }
  std::vector<std::vector<double>> sig(n);  // col j: [diag, entries matching rows[j]]
  for (int j = 0; j < n; ++j) sig[j].assign(rows[j].size() + 1, 0.0);

  auto lookup = [&](int a, int bb) -> double {
    if (a == bb) return sig[a][0];
    const int lo = std::min(a, bb), hi = std::max(a, bb);
    const auto& r = rows[lo];
    const auto it = std::lower_bound(r.begin(), r.end(), hi);
    if (it == r.end() || *it != hi) return 0.0;  // outside the closed pattern
    return sig[lo][1 + (it - r.begin())];
  };

  for (int j = n - 1; j >= 0; --j) {
    const auto& r = rows[j];
    const auto& lv = lvals[j];
    for (int a = static_cast<int>(r.size()) - 1; a >= 0; --a) {
      const int i = r[a];
      double s = 0.0;
      for (size_t k = 0; k < r.size(); ++k) s += lv[k] * lookup(r[k], i);
      sig[j][1 + a] = -s;
    }
    double s2 = 0.0;
    for (size_t k = 0; k < r.size(); ++k) s2 += lv[k] * sig[j][1 + k];
    sig[j][0] = 1.0 / d(j) - s2;
  }

  // Undo the fill-reducing permutation: perm H perm' = L D L'.
  const auto& perm = ldlt.permutationP().indices();
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double v = sig[perm(i)][0];
    out(i) = std::sqrt(std::max(v, 0.0));
  }
  return out;
}

}  // namespace gcspde
