#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gcspde/errors.hpp"
#include "gcspde/projector.hpp"
#include "test_util.hpp"

using namespace gcspde;

TEST_CASE("projector: vertex rows are indicators, centroids are thirds") {
  Mesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  mesh.triangles = {{0, 1, 2}, {1, 3, 2}};

  const std::vector<Point2> locs = {{1.0, 0.0}, {1.0 / 3.0, 1.0 / 3.0}};
  const Eigen::SparseMatrix<double> a = projector(mesh, locs);

  const Eigen::MatrixXd ad = Eigen::MatrixXd(a);
  CHECK(ad(0, 1) == 1.0);
  CHECK(ad.row(0).sum() == 1.0);
  CHECK(ad(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ad(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ad(1, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("projector: reproduces linear functions exactly") {
  auto rng = test_util::seeded_rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> pts(60);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const Mesh mesh = build_mesh(pts, 0.2, 0.2);

  Eigen::VectorXd field(mesh.vertices.size());
  const double a0 = 0.3, ax = -1.2, ay = 2.1;
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    field(i) = a0 + ax * mesh.vertices[i].x + ay * mesh.vertices[i].y;
  }

  std::vector<Point2> probes(40);
  for (auto& p : probes) p = {0.05 + 0.9 * u(rng), 0.05 + 0.9 * u(rng)};
  const Eigen::SparseMatrix<double> a = projector(mesh, probes);
  const Eigen::VectorXd interp = a * field;
  for (int i = 0; i < static_cast<int>(probes.size()); ++i) {
    const double truth = a0 + ax * probes[i].x + ay * probes[i].y;
    CHECK(interp(i) == doctest::Approx(truth).epsilon(1e-12));
  }

  // Convex-combination rows: non-negative, sum to one, at most 3 entries.
  for (int i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    int nnz = 0;
    for (int k = 0; k < a.cols(); ++k) {
      const double v = a.coeff(i, k);
      if (v != 0.0) {
        CHECK(v >= 0.0);
        nnz++;
        sum += v;
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nnz <= 3);
  }
}

TEST_CASE("projector: out-of-mesh point names the offender") {
  Mesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {0, 1}};
  mesh.triangles = {{0, 1, 2}};
  CHECK_THROWS_WITH_AS(projector(mesh, {{0.2, 0.2}, {5.0, 5.0}}),
                       doctest::Contains("location 1"), InputError);
}
