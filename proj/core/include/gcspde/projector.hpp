#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "gcspde/mesh.hpp"

namespace gcspde {

/// Sparse barycentric projector: row i holds the convex-combination weights
/// of location i within its containing triangle (at most 3 non-zeros, rows
/// sum to 1, unit row at a mesh vertex). Throws InputError naming the first
/// location outside the mesh.
Eigen::SparseMatrix<double> projector(const Mesh& mesh, const std::vector<Point2>& locations);

}  // namespace gcspde
