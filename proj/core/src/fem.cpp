#include "gcspde/fem.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "gcspde/errors.hpp"

namespace gcspde {

FemMatrices fem_matrices(const Mesh& mesh) {
  const int m = static_cast<int>(mesh.vertices.size());
  FemMatrices fem;
  fem.c_tilde = Eigen::VectorXd::Zero(m);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangles.size() * 9);

  for (size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
    const auto& t = mesh.triangles[ti];
    const Point2& p0 = mesh.vertices[t[0]];
    const Point2& p1 = mesh.vertices[t[1]];
    const Point2& p2 = mesh.vertices[t[2]];
    const double area2 = triangle_area2(p0, p1, p2);
    if (!(std::fabs(area2) > 1e-14)) {
      throw NumericalError("fem_matrices: degenerate triangle " + std::to_string(ti) + " (" +
                           std::to_string(t[0]) + "," + std::to_string(t[1]) + "," +
                           std::to_string(t[2]) + ")");
    }
    const double area = 0.5 * std::fabs(area2);
    // Gradient of the linear basis on this triangle: (b_k, c_k) / (2 area).
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    for (int i = 0; i < 3; ++i) {
      fem.c_tilde(t[i]) += area / 3.0;
      for (int j = 0; j < 3; ++j) {
        trips.emplace_back(t[i], t[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
      }
    }
  }

  fem.g.resize(m, m);
  fem.g.setFromTriplets(trips.begin(), trips.end());
  fem.g.makeCompressed();

  const Eigen::SparseMatrix<double> gci =
      fem.g * fem.c_tilde.cwiseInverse().asDiagonal();
  Eigen::SparseMatrix<double> m2 = gci * fem.g;
  // Symmetric analytically; enforce it so downstream factorizations see an
  // exactly symmetric pattern.
  m2 = 0.5 * (Eigen::SparseMatrix<double>(m2.transpose()) + m2);
  fem.g_c_inv_g = m2;
  fem.g_c_inv_g.makeCompressed();
  return fem;
}

}  // namespace gcspde
