#pragma once

namespace gcspde {

/// Sentinel for log-probabilities that underflowed to zero. Large negative
/// but finite, so likelihood sums stay arithmetic-safe during optimization.
inline constexpr double kLogZero = -1e300;

/// log(exp(a) + exp(b))
double log_sum_exp(double a, double b);

/// log(exp(a) - exp(b)); requires a >= b. Returns kLogZero when the
/// difference underflows.
double log_diff_exp(double a, double b);

/// Both tails of the regularized incomplete gamma function in log space.
struct LogGammaTails {
  double log_lower;  // log G(shape, x)
  double log_upper;  // log (1 - G(shape, x))
};

/// G(shape, x) = (1/Gamma(shape)) * integral_0^x v^{shape-1} e^{-v} dv,
/// with the convention G(0, x) = 1. Series expansion below x = shape + 1,
/// Lentz continued fraction above, everything carried in log space.
LogGammaTails log_reg_inc_gamma(double shape, double x);

/// G(shape, x) in linear space; exact 1.0 at shape == 0.
double reg_lower_incomplete_gamma(double shape, double x);

/// log( x^{shape-1} e^{-x} / Gamma(shape) ), the derivative of G with
/// respect to x. Requires shape > 0 and x > 0.
double log_gamma_density_unit_scale(double shape, double x);

/// Standard normal upper tail P(Z > z).
double normal_upper_tail(double z);

}  // namespace gcspde
