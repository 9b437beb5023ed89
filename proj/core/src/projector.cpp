#include "gcspde/projector.hpp"

#include <string>

#include "gcspde/errors.hpp"

namespace gcspde {

Eigen::SparseMatrix<double> projector(const Mesh& mesh, const std::vector<Point2>& locations) {
  MeshLocator locator(mesh);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(locations.size() * 3);

  for (size_t i = 0; i < locations.size(); ++i) {
    const auto hit = locator.locate(locations[i]);
    if (hit.triangle < 0)
      throw InputError("projector: location " + std::to_string(i) + " outside the mesh");
    const auto& tri = mesh.triangles[hit.triangle];
    std::array<double, 3> w = hit.barycentric;
    // Snap vertex hits to exact unit rows, clamp roundoff, renormalize.
    for (int k = 0; k < 3; ++k) {
      if (w[k] >= 1.0 - 1e-12) w = {0.0, 0.0, 0.0}, w[k] = 1.0;
    }
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      w[k] = std::max(w[k], 0.0);
      sum += w[k];
    }
    for (int k = 0; k < 3; ++k) {
      const double v = w[k] / sum;
      if (v > 0.0) trips.emplace_back(static_cast<int>(i), tri[k], v);
    }
  }

  Eigen::SparseMatrix<double> a(static_cast<int>(locations.size()),
                                static_cast<int>(mesh.vertices.size()));
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

}  // namespace gcspde
