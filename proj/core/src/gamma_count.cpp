#include "gcspde/gamma_count.hpp"

#include <cmath>
#include <stdexcept>

#include "gcspde/errors.hpp"

namespace gcspde {

void GcParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("GcParams: alpha must be positive and finite");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("GcParams: gamma must be positive and finite");
  if (!(exposure > 0.0) || !std::isfinite(exposure))
    throw std::invalid_argument("GcParams: exposure must be positive and finite");
}

double gc_logpmf(int y, const GcParams& params) {
  params.validate();
  if (y < 0) throw std::invalid_argument("gc_logpmf: y must be non-negative");

  const double x = params.gamma * params.exposure;
  const double a_hi = (static_cast<double>(y) + 1.0) * params.alpha;
  const LogGammaTails hi = log_reg_inc_gamma(a_hi, x);
  if (y == 0) return hi.log_upper > kLogZero ? hi.log_upper : kLogZero;

  const double a_lo = static_cast<double>(y) * params.alpha;
  const LogGammaTails lo = log_reg_inc_gamma(a_lo, x);
  // pmf = G(lo) - G(hi) = upper(hi) - upper(lo); difference through the
  // smaller pair of tails, where the log values carry the most precision.
  double lp;
  if (lo.log_lower <= hi.log_upper) {
    lp = log_diff_exp(lo.log_lower, hi.log_lower);
  } else {
    lp = log_diff_exp(hi.log_upper, lo.log_upper);
  }
  return lp > kLogZero ? lp : kLogZero;
}

double gc_pmf(int y, const GcParams& params) {
  const double lp = gc_logpmf(y, params);
  return lp <= kLogZero ? 0.0 : std::exp(lp);
}

double gc_cdf_below(int y, const GcParams& params) {
  params.validate();
  if (y <= 0) return 0.0;
  const double x = params.gamma * params.exposure;
  const LogGammaTails t = log_reg_inc_gamma(static_cast<double>(y) * params.alpha, x);
  if (t.log_upper <= t.log_lower) return -std::expm1(t.log_lower);
  return std::exp(t.log_upper);
}

std::optional<double> gc_logpmf_deta(int y, double alpha, double eta, double exposure) {
  GcParams params{alpha, alpha * std::exp(eta), exposure};
  if (!std::isfinite(params.gamma) || params.gamma <= 0.0) return std::nullopt;
  const double lp = gc_logpmf(y, params);
  if (lp <= kLogZero / 2) return std::nullopt;

  // d pmf / d eta = x * (g(y*alpha, x) - g((y+1)*alpha, x)) with
  // g(s, x) = x^{s-1} e^{-x} / Gamma(s) and g(0, .) = 0; chain rule dx/deta = x.
  const double x = params.gamma * params.exposure;
  const double lx = std::log(x);
  const double lg_hi = log_gamma_density_unit_scale((y + 1.0) * alpha, x);
  double d;
  if (y == 0) {
    d = -std::exp(lx + lg_hi - lp);
  } else {
    const double lg_lo = log_gamma_density_unit_scale(static_cast<double>(y) * alpha, x);
    d = std::exp(lx + lg_lo - lp) - std::exp(lx + lg_hi - lp);
  }
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

double gc_mean(const GcParams& params, double tol) {
  params.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("gc_mean: tol must be positive");

  const double x = params.gamma * params.exposure;
  double sum = 0.0;
  double prev = 1.0;
  for (int k = 1; k < 100000; ++k) {
    const double term = reg_lower_incomplete_gamma(k * params.alpha, x);
    sum += term;
    // Terms are decreasing; once they decay geometrically below tol, bound
    // the remaining tail by the geometric series and fold it in.
    if (term < tol && k > 1) {
      const double ratio = term / prev;
      if (ratio < 0.9) {
        sum += term * ratio / (1.0 - ratio);
        break;
      }
    }
    prev = term;
  }
  return sum;
}

int gc_truncation_point(const GcParams& params, double tol) {
  params.validate();
  double cum = 0.0;
  for (int y = 0; y < 1000000; ++y) {
    const double term = gc_pmf(y, params);
    cum += term;
    if (cum >= 1.0 - tol && term < tol * 1e-2) return y;
  }
  throw NumericalError("gc_truncation_point: series failed to accumulate to 1 - tol");
}

}  // namespace gcspde
