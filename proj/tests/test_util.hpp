#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace test_util {

inline std::mt19937_64 seeded_rng(uint64_t seed) {
  std::seed_seq seq{static_cast<unsigned int>(seed), static_cast<unsigned int>(seed >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

// Wilson-Hilferty approximation to the chi-square quantile; plenty for
// goodness-of-fit cutoffs at the 0.999 level.
inline double chi2_quantile(double p, int df) {
  const double z = p >= 0.999 ? 3.090232 : (p >= 0.99 ? 2.326348 : 1.644854);
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

// Adaptive Simpson in long double.
template <class F>
long double adaptive_simpson(F f, long double a, long double b, long double fa, long double fm,
                             long double fb, long double tol, int depth) {
  const long double m = 0.5L * (a + b);
  const long double lm = 0.5L * (a + m), rm = 0.5L * (m + b);
  const long double flm = f(lm), frm = f(rm);
  const long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
  const long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
  const long double whole = (b - a) / 6.0L * (fa + 4.0L * fm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0L * tol)
    return left + right + (left + right - whole) / 15.0L;
  return adaptive_simpson(f, a, m, fa, flm, fm, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, tol / 2, depth - 1);
}

// Adaptive integration with a relative tolerance derived from a coarse
// pilot pass, so tiny tail integrals keep full relative accuracy.
template <class F>
long double integrate(F f, long double a, long double b, long double rel_tol = 1e-15L) {
  long double pilot = 0.0L;
  const int panels = 64;
  const long double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const long double lo = a + i * h;
    pilot += h / 6.0L * (f(lo) + 4.0L * f(lo + 0.5L * h) + f(lo + h));
  }
  const long double tol = std::max(fabsl(pilot) * rel_tol, 1e-320L);
  const long double m = 0.5L * (a + b);
  return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 24);
}

// Quadrature oracle for the regularized lower incomplete gamma G(s, x).
// Integrates the regularized integrand so magnitudes stay O(1) for any
// shape. The shape < 1 singularity at the origin is removed by the
// substitution v = t^{1/s}, which flattens the integrand to
// (1/s) exp(-t^{1/s}) (up to the normalizer).
inline long double reg_inc_gamma_quadrature(long double s, long double x) {
  if (s == 0.0L) return 1.0L;
  if (x <= 0.0L) return 0.0L;
  const long double lg = lgammal(s);
  if (s >= 1.0L) {
    return integrate([s, lg](long double v) {
      if (v <= 0.0L) return s == 1.0L ? expl(-lg) : 0.0L;
      return expl((s - 1.0L) * logl(v) - v - lg);
    }, 0.0L, x);
  }
  return integrate([s, lg](long double t) {
    return expl(-(t <= 0.0L ? 0.0L : powl(t, 1.0L / s)) - lg - logl(s));
  }, 0.0L, powl(x, s));
}

}  // namespace test_util
