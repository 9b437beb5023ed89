#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "gcspde/projector.hpp"
#include "gcspde/spde.hpp"
#include "test_util.hpp"

using namespace gcspde;

namespace {

std::vector<Point2> random_points(int n, uint64_t seed) {
  auto rng = test_util::seeded_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

// Correlations implied by Q^{-1} between selected vertices, versus the
// Matern covariance, reported as the sup discrepancy over pairs with
// distances in [dmin, dmax].
double spde_vs_matern_sup_error(const Mesh& mesh, const MaternParams& mp, double dmin,
                                double dmax) {
  const FemMatrices fem = fem_matrices(mesh);
  const SparsePrecision q = precision_matrix(fem, mp.kappa, mp.tau_spde);
  PrecisionFactor factor(q);

  // Interior vertices only: away from the outer hull to dodge boundary bias.
  std::vector<int> interior;
  for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
    const auto& v = mesh.vertices[i];
    if (v.x > 0.15 && v.x < 0.85 && v.y > 0.15 && v.y < 0.85) interior.push_back(i);
  }
  const int n_ref = std::min<int>(40, static_cast<int>(interior.size()));
  std::vector<int> sources(n_ref);
  for (int a = 0; a < n_ref; ++a) sources[a] = interior[a * interior.size() / n_ref];

  const Eigen::Index m = q.rows();
  std::vector<Eigen::VectorXd> cols(n_ref);
  for (int a = 0; a < n_ref; ++a) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e(sources[a]) = 1.0;
    cols[a] = factor.solve(e);
  }
  double sup = 0.0;
  for (int a = 0; a < n_ref; ++a) {
    for (int b = a + 1; b < n_ref; ++b) {
      const auto& vi = mesh.vertices[sources[a]];
      const auto& vj = mesh.vertices[sources[b]];
      const double dist = std::hypot(vi.x - vj.x, vi.y - vj.y);
      if (dist < dmin || dist > dmax) continue;
      const double corr = cols[a](sources[b]) /
                          std::sqrt(cols[a](sources[a]) * cols[b](sources[b]));
      const double target = matern_cov(dist, mp) / mp.sigma2;
      sup = std::max(sup, std::fabs(corr - target));
    }
  }
  return sup;
}

}  // namespace

TEST_CASE("matern_cov: limits and closed forms") {
  MaternParams p = matern_from_range_sigma2(0.5, 2.3, 1.0);
  CHECK(matern_cov(0.0, p) == 2.3);

  MaternParams half;
  half.nu = 0.5;
  half.sigma2 = 1.7;
  half.kappa = 3.0;
  for (double h : {0.01, 0.3, 1.0, 2.5}) {
    CHECK(matern_cov(h, half) ==
          doctest::Approx(1.7 * std::exp(-3.0 * h)).epsilon(1e-10));
  }

  // At the empirical range the correlation sits near 0.1.
  MaternParams unit = matern_from_range_sigma2(0.2, 1.0, 1.0);
  const double corr_at_range = matern_cov(0.2, unit);
  CHECK(corr_at_range > 0.1);
  CHECK(corr_at_range < 0.14);
}

TEST_CASE("parameter links: pinned values and round trips") {
  CHECK(range_to_kappa(0.2, 1.0) == doctest::Approx(14.142135623).epsilon(1e-9));
  CHECK(sigma2_to_tau(1.0, 1.0, 1.0) == doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)).epsilon(1e-12));

  for (double r : {0.05, 0.2, 3.0}) {
    CHECK(kappa_to_range(range_to_kappa(r, 1.0), 1.0) == doctest::Approx(r).epsilon(1e-12));
  }
  for (double s2 : {0.3, 1.0, 4.0}) {
    const double tau = sigma2_to_tau(s2, 2.5, 1.0);
    CHECK(tau_to_sigma2(tau, 2.5, 1.0) == doctest::Approx(s2).epsilon(1e-12));
  }
}

TEST_CASE("precision_matrix: dense oracle on a single triangle") {
  Mesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {0, 1}};
  mesh.triangles = {{0, 1, 2}};
  const FemMatrices fem = fem_matrices(mesh);

  const double kappa = 1.0, tau = 1.0;
  const Eigen::MatrixXd c = fem.c_tilde.asDiagonal();
  const Eigen::MatrixXd g = Eigen::MatrixXd(fem.g);
  const Eigen::MatrixXd dense =
      tau * tau * (std::pow(kappa, 4) * c + 2 * kappa * kappa * g + g * c.inverse() * g);

  const Eigen::MatrixXd q = Eigen::MatrixXd(precision_matrix(fem, kappa, tau));
  CHECK((q - dense).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("precision_matrix: symmetric positive definite across parameters") {
  const Mesh mesh = build_mesh(random_points(70, 31), 0.2, 0.25);
  const FemMatrices fem = fem_matrices(mesh);
  for (double kappa : {0.5, 5.0, 50.0}) {
    for (double tau : {0.1, 3.0}) {
      const SparsePrecision q = precision_matrix(fem, kappa, tau);
      const Eigen::MatrixXd qd = Eigen::MatrixXd(q);
      CHECK((qd - qd.transpose()).cwiseAbs().maxCoeff() < 1e-12 * qd.cwiseAbs().maxCoeff());
      CHECK_NOTHROW(PrecisionFactor{q});
    }
  }
}

TEST_CASE("sample_gmrf: matches the dense inverse on a small mesh") {
  const Mesh mesh = build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.4, 0.55}, {0.7, 0.3}},
                               0.6, 0.0);
  const FemMatrices fem = fem_matrices(mesh);
  const SparsePrecision q = precision_matrix(fem, 3.0, 0.8);
  const Eigen::MatrixXd cov = Eigen::MatrixXd(q).inverse();
  const Eigen::Index m = q.rows();

  PrecisionFactor factor(q);
  auto rng = test_util::seeded_rng(77);
  const int draws = 20000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
  for (int s = 0; s < draws; ++s) {
    const Eigen::VectorXd x = factor.sample(rng);
    mean += x;
    second += x * x.transpose();
  }
  mean /= draws;
  second /= draws;
  const Eigen::MatrixXd emp = second - mean * mean.transpose();

  for (Eigen::Index i = 0; i < m; ++i) {
    CHECK(emp(i, i) == doctest::Approx(cov(i, i)).epsilon(0.05));
    CHECK(std::fabs(mean(i)) < 3.0 * std::sqrt(cov(i, i) / draws));
  }

  auto rng_a = test_util::seeded_rng(123);
  auto rng_b = test_util::seeded_rng(123);
  CHECK(factor.sample(rng_a) == factor.sample(rng_b));
}

TEST_CASE("pc prior: tail identities and pinned rates") {
  const PcPriorSpec spec{0.74, 0.05, 49.0, 0.05};
  const double lambda_sigma = -std::log(0.05) / 0.74;
  const double lambda_range = -std::log(0.05) * 49.0;
  CHECK(lambda_sigma == doctest::Approx(4.048).epsilon(1e-3));
  CHECK(lambda_range == doctest::Approx(146.78).epsilon(1e-3));

  // Marginal tail integrals recovered by quadrature of the joint density.
  const double p_sigma = (double)test_util::integrate(
      [&](long double s) {
        return (long double)std::exp(pc_prior_logdensity((double)s, 1.0, spec)) /
               (lambda_range * std::exp(-2.0 * std::log(1.0) - lambda_range / 1.0));
      },
      (long double)spec.sigma0, 200.0L);
  CHECK(p_sigma == doctest::Approx(spec.q1).epsilon(1e-6));

  const double p_range = (double)test_util::integrate(
      [&](long double r) {
        if (r <= 0.0L) return 0.0L;
        return (long double)std::exp(pc_prior_logdensity(1.0, (double)r, spec)) /
               (lambda_sigma * std::exp(-lambda_sigma));
      },
      1e-9L, (long double)spec.r0);
  CHECK(p_range == doctest::Approx(spec.q2).epsilon(1e-6));
}

TEST_CASE("SPDE field reproduces the Matern correlation") {
  const MaternParams mp = matern_from_range_sigma2(0.2, 1.0, 1.0);
  const Mesh mesh = build_mesh(random_points(220, 91), 0.025, 0.3);
  const double sup = spde_vs_matern_sup_error(mesh, mp, 0.05, 0.4);
  CHECK(sup < 0.05);
}

TEST_CASE("mesh refinement does not worsen the Matern discrepancy") {
  const MaternParams mp = matern_from_range_sigma2(0.2, 1.0, 1.0);
  const auto pts = random_points(150, 55);
  const double coarse = spde_vs_matern_sup_error(build_mesh(pts, 0.12, 0.25), mp, 0.05, 0.4);
  const double fine = spde_vs_matern_sup_error(build_mesh(pts, 0.06, 0.25), mp, 0.05, 0.4);
  CHECK(fine <= coarse + 1e-9);
}
