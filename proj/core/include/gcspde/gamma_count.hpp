#pragma once

#include <optional>
#include <random>

#include "gcspde/special_functions.hpp"

namespace gcspde {

/// Parameters of the gamma-count distribution: waiting times between events
/// are iid Gamma(alpha, gamma) (shape/rate) and counts are taken over an
/// observation window of length `exposure`.
struct GcParams {
  double alpha = 1.0;
  double gamma = 1.0;
  double exposure = 1.0;

  void validate() const;
};

/// P(Y = y) = G(y*alpha, gamma*T) - G((y+1)*alpha, gamma*T).
double gc_pmf(int y, const GcParams& params);

/// log P(Y = y); returns kLogZero when the pmf underflows to zero.
double gc_logpmf(int y, const GcParams& params);

/// P(Y < y) = 1 - G(y*alpha, gamma*T) (renewal duality).
double gc_cdf_below(int y, const GcParams& params);

/// d/deta log P(Y = y) under the waiting-time regression link
/// gamma = alpha * exp(eta). Analytic through dG(s,x)/dx. Returns nullopt
/// when the pmf is degenerate (underflows) at this eta, in which case a
/// Newton caller must damp its step.
std::optional<double> gc_logpmf_deta(int y, double alpha, double eta, double exposure = 1.0);

/// E(Y) = sum_{k>=1} G(k*alpha, gamma*T), truncated once the running term
/// drops below tol with a geometric tail bound folded in.
double gc_mean(const GcParams& params, double tol = 1e-12);

/// Smallest Y* such that the pmf cumulates to >= 1 - tol and the current
/// term has fallen below tol/100.
int gc_truncation_point(const GcParams& params, double tol = 1e-10);

/// Renewal sampler: accumulate Gamma(alpha, gamma) waiting times until the
/// sum exceeds the exposure window, return the number of completed events.
template <class Rng>
int gc_sample(const GcParams& params, Rng& rng) {
  std::gamma_distribution<double> wait(params.alpha, 1.0 / params.gamma);
  double t = wait(rng);
  int count = 0;
  while (t <= params.exposure) {
    ++count;
    t += wait(rng);
  }
  return count;
}

}  // namespace gcspde
