#pragma once

#include <Eigen/Sparse>

#include "gcspde/mesh.hpp"

namespace gcspde {

/// Piecewise-linear finite-element matrices on a triangulation:
/// lumped mass C (diagonal, C_ii = sum of adjacent triangle areas / 3) and
/// stiffness G (G_ij = integral of grad(psi_i) . grad(psi_j)).
struct FemMatrices {
  Eigen::VectorXd c_tilde;            // diagonal of the lumped mass matrix
  Eigen::SparseMatrix<double> g;      // stiffness
  Eigen::SparseMatrix<double> g_c_inv_g;  // G C^{-1} G, precomputed for the precision

  Eigen::Index size() const { return c_tilde.size(); }
};

/// Assembles the mass and stiffness matrices. Throws NumericalError naming
/// the offending triangle if one is degenerate.
FemMatrices fem_matrices(const Mesh& mesh);

}  // namespace gcspde
