#include "gcspde/fit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <functional>

#include "gcspde/special_functions.hpp"

namespace gcspde {

namespace {

constexpr double kFailedLogPost = -1e290;

// Cached hyper-posterior evaluations; failed Newton runs score kFailedLogPost
// so searches steer away instead of aborting.
class EvalCache {
 public:
  explicit EvalCache(const LatentModel& model) : model_(model) {}

  struct Record {
    double log_post = kFailedLogPost;
    Eigen::VectorXd mode;
    Eigen::VectorXd eta;
    bool ok = false;
  };

  const Record& eval(const Eigen::VectorXd& theta) {
    std::array<long long, 3> key{0, 0, 0};
    for (int i = 0; i < theta.size(); ++i) key[i] = std::llround(theta(i) * 1e8);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    Record rec;
    try {
      const GaussianApprox ga =
          gaussian_approx(model_, theta, warm_.size() > 0 ? &warm_ : nullptr);
      rec.log_post = log_hyper_posterior(model_, theta, ga);
      rec.mode = ga.mode;
      rec.eta = ga.eta;
      rec.ok = std::isfinite(rec.log_post);
      if (!rec.ok) rec.log_post = kFailedLogPost;
      warm_ = ga.mode;
    } catch (const NumericalError&) {
      rec = Record{};
    }
    return cache_.emplace(key, std::move(rec)).first->second;
  }

  int evaluations() const { return static_cast<int>(cache_.size()); }

 private:
  const LatentModel& model_;
  std::map<std::array<long long, 3>, Record> cache_;
  Eigen::VectorXd warm_;
};

// Standard Nelder-Mead minimization with adaptive restarts disabled; the
// hyper posterior is smooth and low-dimensional.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double step, int max_iter,
                            double ftol) {
  const int k = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> x(k + 1, x0);
  std::vector<double> fx(k + 1);
  for (int i = 1; i <= k; ++i) x[i](i - 1) += step;
  for (int i = 0; i <= k; ++i) fx[i] = f(x[i]);

  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<int> order(k + 1);
    for (int i = 0; i <= k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    {
      std::vector<Eigen::VectorXd> xs(k + 1);
      std::vector<double> fs(k + 1);
      for (int i = 0; i <= k; ++i) {
        xs[i] = x[order[i]];
        fs[i] = fx[order[i]];
      }
      x = std::move(xs);
      fx = std::move(fs);
    }
    if (std::fabs(fx[k] - fx[0]) < ftol * (1.0 + std::fabs(fx[0]))) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) centroid += x[i];
    centroid /= k;

    const Eigen::VectorXd xr = centroid + (centroid - x[k]);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - x[k]);
      const double fe = f(xe);
      if (fe < fr) {
        x[k] = xe;
        fx[k] = fe;
      } else {
        x[k] = xr;
        fx[k] = fr;
      }
    } else if (fr < fx[k - 1]) {
      x[k] = xr;
      fx[k] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (x[k] - centroid);
      const double fc = f(xc);
      if (fc < fx[k]) {
        x[k] = xc;
        fx[k] = fc;
      } else {
        for (int i = 1; i <= k; ++i) {
          x[i] = x[0] + 0.5 * (x[i] - x[0]);
          fx[i] = f(x[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= k; ++i)
    if (fx[i] < fx[best]) best = i;
  return x[best];
}

// Posterior precision of the latent field at a stored mode, rebuilt from the
// cached linear predictor.
SparsePrecision rebuild_precision(const LatentModel& model, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& eta) {
  const auto& b = model.combined();
  const Eigen::SparseMatrix<double> bt = b.transpose();
  const ObsLikelihood lik{model.likelihood, model.theta_dispersion(theta)};
  Eigen::VectorXd w(model.n_obs());
  for (Eigen::Index i = 0; i < model.n_obs(); ++i) {
    w(i) = std::max(-lik.d2logpmf(model.y(i), eta(i)), 1e-8);
  }
  SparsePrecision h = bt * w.asDiagonal() * b;
  h += latent_prior_precision(model, theta, nullptr);
  h.makeCompressed();
  return h;
}

double weighted_quantile(std::vector<std::pair<double, double>> value_weight, double p) {
  std::sort(value_weight.begin(), value_weight.end());
  double cum = 0.0;
  for (const auto& [v, w] : value_weight) {
    cum += w;
    if (cum >= p) return v;
  }
  return value_weight.back().first;
}

// Quantile of a Gaussian mixture by bisection on its CDF.
double mixture_quantile(const std::vector<double>& w, const std::vector<double>& mu,
                        const std::vector<double>& sd, double p) {
  double lo = mu[0], hi = mu[0];
  for (size_t k = 0; k < mu.size(); ++k) {
    lo = std::min(lo, mu[k] - 8.0 * sd[k]);
    hi = std::max(hi, mu[k] + 8.0 * sd[k]);
  }
  auto cdf = [&](double x) {
    double c = 0.0;
    for (size_t k = 0; k < mu.size(); ++k) {
      c += w[k] * 0.5 * std::erfc((mu[k] - x) / (sd[k] * std::sqrt(2.0)));
    }
    return c;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Eigen::VectorXd default_init_theta(const LatentModel& model) {
  Eigen::VectorXd theta(model.theta_dim());
  const double range0 = std::max(model.init_range_guess, 1e-6);
  const double kappa0 = range_to_kappa(range0, 1.0);
  const double tau0 = sigma2_to_tau(1.0, kappa0, 1.0);
  int at = 0;
  if (model.theta_dim() == 3) theta(at++) = 0.0;  // log dispersion
  theta(at++) = std::log(tau0);
  theta(at) = std::log(kappa0);
  return theta;
}

std::vector<HyperPoint> explore_hyper_grid(const LatentModel& model,
                                           const Eigen::VectorXd& init,
                                           const FitOptions& opts) {
  model.validate();
  const int k = model.theta_dim();
  if (init.size() != k) throw InputError("explore_hyper_grid: init has wrong dimension");

  EvalCache cache(model);
  auto neg = [&](const Eigen::VectorXd& t) { return -cache.eval(t).log_post; };

  const Eigen::VectorXd mode = nelder_mead(neg, init, 0.5, opts.nm_max_iter, 1e-7);
  const double lp_mode = cache.eval(mode).log_post;
  if (lp_mode <= kFailedLogPost) {
    throw NumericalError("explore_hyper_grid: hyper posterior mode search failed");
  }

  // Curvature at the mode by central differences.
  const double h = 0.15;
  Eigen::MatrixXd hess(k, k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd up = mode, dn = mode;
    up(i) += h;
    dn(i) -= h;
    hess(i, i) = (cache.eval(up).log_post - 2.0 * lp_mode + cache.eval(dn).log_post) / (h * h);
    for (int j = i + 1; j < k; ++j) {
      Eigen::VectorXd pp = mode, pm = mode, mp = mode, mm = mode;
      pp(i) += h;
      pp(j) += h;
      pm(i) += h;
      pm(j) -= h;
      mp(i) -= h;
      mp(j) += h;
      mm(i) -= h;
      mm(j) -= h;
      hess(i, j) = hess(j, i) = (cache.eval(pp).log_post - cache.eval(pm).log_post -
                                 cache.eval(mp).log_post + cache.eval(mm).log_post) /
                                (4.0 * h * h);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-hess);
  Eigen::VectorXd axis_sd(k);
  for (int i = 0; i < k; ++i) {
    const double lambda = es.eigenvalues()(i);
    axis_sd(i) = lambda > 1e-8 ? 1.0 / std::sqrt(lambda) : 5.0;
  }
  const Eigen::MatrixXd axes = es.eigenvectors();

  // Breadth-first walk over the integer lattice in the eigenbasis, keeping
  // points within the log-drop window of the running maximum.
  std::map<std::vector<int>, double> kept;
  std::set<std::vector<int>> seen;
  std::deque<std::vector<int>> queue;
  const std::vector<int> origin(k, 0);
  queue.push_back(origin);
  seen.insert(origin);
  double lp_max = lp_mode;

  auto theta_of = [&](const std::vector<int>& z) {
    Eigen::VectorXd t = mode;
    for (int i = 0; i < k; ++i) {
      t += axes.col(i) * (opts.grid_step * axis_sd(i) * z[i]);
    }
    return t;
  };

  while (!queue.empty() && static_cast<int>(kept.size()) < opts.max_grid_points) {
    const std::vector<int> z = queue.front();
    queue.pop_front();
    const double lp = cache.eval(theta_of(z)).log_post;
    if (lp <= kFailedLogPost) continue;
    if (lp < lp_max - opts.grid_log_drop) continue;
    lp_max = std::max(lp_max, lp);
    kept[z] = lp;
    for (int i = 0; i < k; ++i) {
      for (int dir : {-1, 1}) {
        std::vector<int> nb = z;
        nb[i] += dir;
        if (seen.insert(nb).second) queue.push_back(nb);
      }
    }
  }

  std::vector<HyperPoint> grid;
  double wsum = 0.0;
  for (const auto& [z, lp] : kept) {
    if (lp < lp_max - opts.grid_log_drop) continue;
    HyperPoint hp;
    hp.theta = theta_of(z);
    hp.log_posterior = lp;
    hp.weight = std::exp(lp - lp_max);
    wsum += hp.weight;
    grid.push_back(std::move(hp));
  }
  for (auto& hp : grid) hp.weight /= wsum;
  return grid;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> latent_marginals(
    const std::vector<HyperPoint>& grid, const std::vector<Eigen::VectorXd>& modes,
    const std::vector<Eigen::VectorXd>& sds) {
  if (grid.empty() || grid.size() != modes.size() || grid.size() != sds.size()) {
    throw InputError("latent_marginals: inconsistent grid");
  }
  const Eigen::Index s = modes[0].size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(s);
  for (size_t g = 0; g < grid.size(); ++g) {
    mean += grid[g].weight * modes[g];
    second += grid[g].weight *
              (sds[g].array().square() + modes[g].array().square()).matrix();
  }
  const Eigen::VectorXd var = (second - mean.cwiseProduct(mean)).cwiseMax(0.0);
  return {mean, var.cwiseSqrt()};
}

FitResult fit_model(const LatentModel& model, const FitOptions& opts) {
  return fit_model(model, opts, default_init_theta(model));
}

FitResult fit_model(const LatentModel& model, const FitOptions& opts,
                    const Eigen::VectorXd& init_theta) {
  model.validate();
  FitResult fit;
  fit.grid = explore_hyper_grid(model, init_theta, opts);
  const size_t g_count = fit.grid.size();
  if (g_count == 0) throw NumericalError("fit_model: empty hyper grid");

  fit.modal_index = 0;
  for (size_t g = 1; g < g_count; ++g) {
    if (fit.grid[g].log_posterior > fit.grid[fit.modal_index].log_posterior) {
      fit.modal_index = static_cast<int>(g);
    }
  }

  fit.modes.resize(g_count);
  fit.sds.resize(g_count);
  fit.etas.resize(g_count);
  const Eigen::VectorXd* warm = nullptr;
  for (size_t g = 0; g < g_count; ++g) {
    const GaussianApprox ga = gaussian_approx(model, fit.grid[g].theta, warm);
    fit.modes[g] = ga.mode;
    fit.etas[g] = ga.eta;
    // Marginal sds are only consumed weight-proportionally; skip the
    // Takahashi pass for negligible points and reuse the modal one.
    if (fit.grid[g].weight >= 1e-4 || static_cast<int>(g) == fit.modal_index) {
      fit.sds[g] = marginal_sd_from_precision(ga.precision);
    }
    warm = &fit.modes[g];
  }
  for (size_t g = 0; g < g_count; ++g) {
    if (fit.sds[g].size() == 0) fit.sds[g] = fit.sds[fit.modal_index];
  }

  std::tie(fit.latent_mean, fit.latent_sd) = latent_marginals(fit.grid, fit.modes, fit.sds);

  // Posterior draws for scoring: pick the grid point by weight, then draw
  // the latent vector from its Gaussian approximation. Draws are grouped by
  // grid point so each precision is factorized once.
  const int s_draws = opts.scoring_draws;
  const Eigen::Index n = model.n_obs();
  fit.loglik_draws.resize(n, s_draws);
  fit.cdf_draws.resize(n, s_draws);
  fit.pmf_draws.resize(n, s_draws);

  std::mt19937_64 rng(opts.seed ^ 0x5851f42d4c957f2dull);
  std::vector<double> w(g_count);
  for (size_t g = 0; g < g_count; ++g) w[g] = fit.grid[g].weight;
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::vector<std::vector<int>> draws_for(g_count);
  for (int s = 0; s < s_draws; ++s) draws_for[pick(rng)].push_back(s);

  const auto& b = model.combined();
  for (size_t g = 0; g < g_count; ++g) {
    if (draws_for[g].empty()) continue;
    const SparsePrecision h = rebuild_precision(model, fit.grid[g].theta, fit.etas[g]);
    const PrecisionFactor factor(h);
    const ObsLikelihood lik{model.likelihood, model.theta_dispersion(fit.grid[g].theta)};
    for (int s : draws_for[g]) {
      const Eigen::VectorXd psi = fit.modes[g] + factor.sample(rng);
      const Eigen::VectorXd eta = b * psi;
      for (Eigen::Index i = 0; i < n; ++i) {
        fit.loglik_draws(i, s) = lik.logpmf(model.y(i), eta(i));
        fit.cdf_draws(i, s) = lik.cdf_below(model.y(i), eta(i));
        fit.pmf_draws(i, s) = lik.pmf_at(model.y(i), eta(i));
      }
    }
  }

  // Deviance at the posterior mean (modal-weight theta).
  const ObsLikelihood modal_lik{model.likelihood,
                                model.theta_dispersion(fit.grid[fit.modal_index].theta)};
  const Eigen::VectorXd eta_mean = b * fit.latent_mean;
  fit.loglik_at_mean.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.loglik_at_mean(i) = modal_lik.logpmf(model.y(i), eta_mean(i));
  }

  // Parameter summaries in natural scales.
  const Eigen::Index p = model.n_fixed();
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> wg(g_count), mu(g_count), sd(g_count);
    for (size_t g = 0; g < g_count; ++g) {
      wg[g] = fit.grid[g].weight;
      mu[g] = fit.modes[g](j);
      sd[g] = fit.sds[g](j);
    }
    ParamSummary ps;
    ps.name = "beta" + std::to_string(j);
    ps.mean = fit.latent_mean(j);
    ps.sd = fit.latent_sd(j);
    ps.q025 = mixture_quantile(wg, mu, sd, 0.025);
    ps.q500 = mixture_quantile(wg, mu, sd, 0.5);
    ps.q975 = mixture_quantile(wg, mu, sd, 0.975);
    fit.summaries.push_back(ps);
  }
  auto hyper_summary = [&](const std::string& name, auto&& transform) {
    std::vector<std::pair<double, double>> vw(g_count);
    double mean = 0.0, second = 0.0;
    for (size_t g = 0; g < g_count; ++g) {
      const double v = transform(fit.grid[g].theta);
      vw[g] = {v, fit.grid[g].weight};
      mean += fit.grid[g].weight * v;
      second += fit.grid[g].weight * v * v;
    }
    ParamSummary ps;
    ps.name = name;
    ps.mean = mean;
    ps.sd = std::sqrt(std::max(second - mean * mean, 0.0));
    ps.q025 = weighted_quantile(vw, 0.025);
    ps.q500 = weighted_quantile(vw, 0.5);
    ps.q975 = weighted_quantile(vw, 0.975);
    fit.summaries.push_back(ps);
  };
  if (model.likelihood == Likelihood::GammaCount) {
    hyper_summary("alpha", [&](const Eigen::VectorXd& t) { return std::exp(t(0)); });
  } else if (model.likelihood == Likelihood::NegBinomial) {
    hyper_summary("size", [&](const Eigen::VectorXd& t) { return std::exp(t(0)); });
  }
  hyper_summary("range", [&](const Eigen::VectorXd& t) {
    return kappa_to_range(std::exp(model.theta_log_kappa(t)), 1.0);
  });
  hyper_summary("sigma2", [&](const Eigen::VectorXd& t) {
    return tau_to_sigma2(std::exp(model.theta_log_tau(t)),
                         std::exp(model.theta_log_kappa(t)), 1.0);
  });
  hyper_summary("tau_spde", [&](const Eigen::VectorXd& t) {
    return std::exp(model.theta_log_tau(t));
  });
  hyper_summary("kappa", [&](const Eigen::VectorXd& t) {
    return std::exp(model.theta_log_kappa(t));
  });
  return fit;
}

PredictResult predict_eta(const LatentModel& model, const FitResult& fit,
                          const Eigen::MatrixXd& design_pred,
                          const Eigen::SparseMatrix<double>& projector_pred) {
  if (design_pred.rows() != projector_pred.rows()) {
    throw InputError("predict_eta: design/projector row mismatch");
  }
  if (design_pred.cols() != model.n_fixed() || projector_pred.cols() != model.n_field()) {
    throw InputError("predict_eta: column mismatch with the fitted model");
  }
  const Eigen::Index n_loc = design_pred.rows();
  const Eigen::Index p = model.n_fixed();
  const Eigen::Index s = model.latent_size();
  const Eigen::SparseMatrix<double, Eigen::RowMajor> proj_rows = projector_pred;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_loc);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(n_loc);
  for (size_t g = 0; g < fit.grid.size(); ++g) {
    const double w = fit.grid[g].weight;
    if (w < 1e-6) continue;
    const Eigen::VectorXd mu =
        design_pred * fit.modes[g].head(p) + projector_pred * fit.modes[g].tail(s - p);

    const SparsePrecision h = rebuild_precision(model, fit.grid[g].theta, fit.etas[g]);
    Eigen::SimplicialLDLT<SparsePrecision> solver(h);
    if (solver.info() != Eigen::Success) {
      throw NotPositiveDefiniteError("predict_eta: precision factorization failed");
    }
    // Solve in chunks to bound the dense right-hand-side block.
    const Eigen::Index chunk = 256;
    Eigen::VectorXd var(n_loc);
    for (Eigen::Index at = 0; at < n_loc; at += chunk) {
      const Eigen::Index len = std::min(chunk, n_loc - at);
      Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(s, len);
      for (Eigen::Index r = 0; r < len; ++r) {
        rhs.col(r).head(p) = design_pred.row(at + r).transpose();
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(proj_rows, at + r);
             it; ++it) {
          rhs(p + it.col(), r) = it.value();
        }
      }
      const Eigen::MatrixXd sol = solver.solve(rhs);
      for (Eigen::Index r = 0; r < len; ++r) {
        var(at + r) = rhs.col(r).dot(sol.col(r));
      }
    }
    mean += w * mu;
    second += w * (var + mu.cwiseProduct(mu));
  }
  PredictResult out;
  out.mean = mean;
  out.sd = (second - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace gcspde
