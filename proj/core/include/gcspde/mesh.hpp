#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace gcspde {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Conforming triangulation: CCW triangles indexing into `vertices`.
/// The first vertices are the (deduplicated) input locations, followed by
/// synthetic boundary-ring and interior fill points.
struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  double boundary_extension = 0.0;
};

struct MeshStats {
  int n_vertices = 0;
  int n_triangles = 0;
  double min_angle_deg = 0.0;
  double max_edge = 0.0;
  double total_area = 0.0;
};

/// Delaunay triangulation of the locations plus an inflated convex-hull
/// ring of synthetic vertices (skipped when extension == 0), refined until
/// no interior edge exceeds max_edge; edges in the extension band get a
/// 2x budget. Deterministic for fixed inputs.
Mesh build_mesh(const std::vector<Point2>& locations, double max_edge, double extension);

MeshStats mesh_stats(const Mesh& mesh);

/// Signed doubled area of the triangle (positive for CCW).
double triangle_area2(const Point2& a, const Point2& b, const Point2& c);

/// Point location with barycentric output. Walks the adjacency graph from
/// the previous hit and falls back to an exact-orientation scan near edges.
class MeshLocator {
 public:
  explicit MeshLocator(const Mesh& mesh);

  struct Hit {
    int triangle = -1;
    std::array<double, 3> barycentric{};
  };

  /// Returns the containing triangle, or triangle == -1 if outside the mesh.
  Hit locate(const Point2& p) const;

 private:
  const Mesh& mesh_;
  std::vector<std::array<int, 3>> neighbors_;  // per triangle, across edge opposite vertex k
  mutable int last_hit_ = 0;
};

/// Plain-text mesh format: "v x y" vertex lines then "t i j k" triangle
/// lines, 0-based indices.
void save_mesh(const Mesh& mesh, std::ostream& out);
Mesh load_mesh(std::istream& in);
void save_mesh_file(const Mesh& mesh, const std::string& path);
Mesh load_mesh_file(const std::string& path);

}  // namespace gcspde
