#include "gcspde/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gcspde/errors.hpp"

namespace gcspde {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dist2(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Andrew's monotone chain; returns the hull CCW without repeated endpoint.
std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x == b.x && a.y == b.y;
  }), pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) return pts;
  std::vector<Point2> h(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) k--;
    h[k++] = pts[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) k--;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

bool in_convex_polygon(const std::vector<Point2>& poly, const Point2& p, double tol) {
  for (size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    if (cross(a, b, p) < -tol) return false;
  }
  return true;
}

// Incremental Delaunay triangulation: locate the containing triangle,
// split it (1->3, or 2->4 when the point lands on an edge), then restore
// the Delaunay property with Lawson flips. All operations are local, so
// the mesh stays conforming however the floating-point predicates resolve
// near-degenerate configurations.
class Triangulator {
 public:
  Triangulator(const Point2& lo, const Point2& hi) {
    scale_ = std::max({hi.x - lo.x, hi.y - lo.y, 1e-9});
    const double cx = 0.5 * (lo.x + hi.x);
    const double cy = 0.5 * (lo.y + hi.y);
    const double r = 64.0 * scale_;
    pts_.push_back({cx, cy + 2.0 * r});
    pts_.push_back({cx - 1.8 * r, cy - r});
    pts_.push_back({cx + 1.8 * r, cy - r});
    int a = 0, b = 1, c = 2;
    if (cross(pts_[a], pts_[b], pts_[c]) < 0) std::swap(b, c);
    tris_.push_back({{a, b, c}, {-1, -1, -1}, true});
  }

  // Inserts p; returns its vertex index, or an existing index when p
  // coincides with a vertex of its containing triangle (mesh unchanged).
  int add_point(const Point2& p) {
    auto [t, edge_slot] = locate(p);
    if (t < 0) throw NumericalError("triangulation: point outside bounding triangle");
    const double dup2 = 1e-18 * scale_ * scale_;
    for (int k = 0; k < 3; ++k) {
      if (dist2(pts_[tris_[t].v[k]], p) <= dup2) return tris_[t].v[k];
    }
    if (edge_slot < 0) {
      // A face split must not invert a sub-triangle; when p sits within
      // roundoff of an edge, route through the edge split instead.
      const auto& v = tris_[t].v;
      for (int k = 0; k < 3; ++k) {
        if (cross(pts_[v[(k + 1) % 3]], pts_[v[(k + 2) % 3]], p) <= 0.0) {
          edge_slot = k;
          break;
        }
      }
    }
    const int vi = static_cast<int>(pts_.size());
    pts_.push_back(p);
    std::vector<std::pair<int, int>> stack;  // (triangle, slot of vi) to legalize
    if (edge_slot >= 0) {
      split_edge(t, edge_slot, vi, stack);
    } else {
      split_face(t, vi, stack);
    }
    legalize(vi, stack);
    return vi;
  }

  template <class Fn>
  void for_each_triangle(Fn fn) const {
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) continue;
      fn(t.v[0], t.v[1], t.v[2]);
    }
  }

  const Point2& point(int i) const { return pts_[i]; }

  Mesh extract(double extension) const {
    Mesh mesh;
    mesh.boundary_extension = extension;
    mesh.vertices.assign(pts_.begin() + 3, pts_.end());
    for_each_triangle([&](int a, int b, int c) {
      // Collinear hull chains can leave zero-area slivers; dropping one
      // keeps the mesh conforming (its interior edges become hull edges).
      if (cross(pts_[a], pts_[b], pts_[c]) <= 1e-12 * scale_ * scale_) return;
      mesh.triangles.push_back({a - 3, b - 3, c - 3});
    });
    return mesh;
  }

 private:
  // Edge slot k of a triangle is (v[(k+1)%3], v[(k+2)%3]), opposite v[k];
  // n[k] is the triangle across that edge (-1 outside the super-triangle).
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;
    bool alive;
  };

  int slot_of(int t, int vertex) const {
    for (int k = 0; k < 3; ++k)
      if (tris_[t].v[k] == vertex) return k;
    throw NumericalError("triangulation: inconsistent adjacency");
  }

  void set_neighbor(int t, int old_nbr, int new_nbr) {
    if (t < 0) return;
    for (int k = 0; k < 3; ++k) {
      if (tris_[t].n[k] == old_nbr) {
        tris_[t].n[k] = new_nbr;
        return;
      }
    }
    throw NumericalError("triangulation: inconsistent adjacency");
  }

  // Walks toward p; returns (triangle, edge slot) with edge slot >= 0 when p
  // lies on that edge, or (-1, -1) when p cannot be located.
  std::pair<int, int> locate(const Point2& p) const {
    int t = hint_;
    if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) {
      t = static_cast<int>(tris_.size()) - 1;
      while (t >= 0 && !tris_[t].alive) --t;
      if (t < 0) return {-1, -1};
    }
    const long cap = 2 * static_cast<long>(tris_.size()) + 64;
    for (long step = 0; step < cap; ++step) {
      const auto& tv = tris_[t].v;
      const double area2 = cross(pts_[tv[0]], pts_[tv[1]], pts_[tv[2]]);
      double lam[3];
      for (int k = 0; k < 3; ++k) {
        lam[k] = cross(pts_[tv[(k + 1) % 3]], pts_[tv[(k + 2) % 3]], p) / area2;
      }
      const int worst = static_cast<int>(std::min_element(lam, lam + 3) - lam);
      if (lam[worst] >= -1e-9) {
        hint_ = t;
        return {t, lam[worst] <= 1e-9 ? worst : -1};
      }
      const int next = tris_[t].n[worst];
      if (next < 0) break;
      t = next;
    }
    // Cycled in a degenerate neighborhood: exhaustive scan, most-inside wins.
    double best = -std::numeric_limits<double>::max();
    int best_t = -1, best_slot = -1;
    for (int s = 0; s < static_cast<int>(tris_.size()); ++s) {
      if (!tris_[s].alive) continue;
      const auto& sv = tris_[s].v;
      const double area2 = cross(pts_[sv[0]], pts_[sv[1]], pts_[sv[2]]);
      double lam[3];
      for (int k = 0; k < 3; ++k) {
        lam[k] = cross(pts_[sv[(k + 1) % 3]], pts_[sv[(k + 2) % 3]], p) / area2;
      }
      const int worst = static_cast<int>(std::min_element(lam, lam + 3) - lam);
      if (lam[worst] > best) {
        best = lam[worst];
        best_t = s;
        best_slot = std::fabs(lam[worst]) <= 1e-9 ? worst : -1;
      }
    }
    if (best < -1e-6) return {-1, -1};
    hint_ = best_t;
    return {best_t, best_slot};
  }

  void split_face(int t, int vi, std::vector<std::pair<int, int>>& stack) {
    const auto tv = tris_[t].v;
    const auto tn = tris_[t].n;
    const int a = tv[0], b = tv[1], c = tv[2];
    const int na = tn[0], nb = tn[1], nc = tn[2];  // across (b,c), (c,a), (a,b)
    const int t1 = t;
    const int t2 = static_cast<int>(tris_.size());
    const int t3 = t2 + 1;
    tris_[t1] = {{vi, a, b}, {nc, t2, t3}, true};
    tris_.push_back({{vi, b, c}, {na, t3, t1}, true});
    tris_.push_back({{vi, c, a}, {nb, t1, t2}, true});
    set_neighbor(na, t, t2);
    set_neighbor(nb, t, t3);
    stack.push_back({t1, 0});
    stack.push_back({t2, 0});
    stack.push_back({t3, 0});
    hint_ = t1;
  }

  void split_edge(int t, int k, int vi, std::vector<std::pair<int, int>>& stack) {
    const auto tv = tris_[t].v;
    const auto tn = tris_[t].n;
    const int o = tv[k], i = tv[(k + 1) % 3], j = tv[(k + 2) % 3];
    const int u = tn[k];
    const int t_jo = tn[(k + 1) % 3];  // across (j, o)
    const int t_oi = tn[(k + 2) % 3];  // across (o, i)

    if (u < 0) {
      const int t1 = t;
      const int t2 = static_cast<int>(tris_.size());
      tris_[t1] = {{vi, o, i}, {t_oi, -1, t2}, true};
      tris_.push_back({{vi, j, o}, {t_jo, t1, -1}, true});
      set_neighbor(t_jo, t, t2);
      stack.push_back({t1, 0});
      stack.push_back({t2, 0});
      hint_ = t1;
      return;
    }

    const int ku = slot_of_opposite(u, i, j);
    const int d = tris_[u].v[ku];
    const auto un = tris_[u].n;
    const int u_id = un[(ku + 1) % 3];  // across (i, d)
    const int u_dj = un[(ku + 2) % 3];  // across (d, j)

    const int t1 = t, u1 = u;
    const int t2 = static_cast<int>(tris_.size());
    const int u2 = t2 + 1;
    tris_[t1] = {{vi, o, i}, {t_oi, u2, t2}, true};
    tris_.push_back({{vi, j, o}, {t_jo, t1, u1}, true});   // t2
    tris_[u1] = {{vi, d, j}, {u_dj, t2, u2}, true};
    tris_.push_back({{vi, i, d}, {u_id, u1, t1}, true});   // u2
    set_neighbor(t_jo, t, t2);
    set_neighbor(u_id, u, u2);
    stack.push_back({t1, 0});
    stack.push_back({t2, 0});
    stack.push_back({u1, 0});
    stack.push_back({u2, 0});
    hint_ = t1;
  }

  // Slot of the vertex of u that is not on edge (i, j).
  int slot_of_opposite(int u, int i, int j) const {
    for (int k = 0; k < 3; ++k) {
      const int v = tris_[u].v[k];
      if (v != i && v != j) return k;
    }
    throw NumericalError("triangulation: inconsistent adjacency");
  }

  bool in_circumcircle(int t, int d) const {
    const auto& v = tris_[t].v;
    const Point2 &pa = pts_[v[0]], &pb = pts_[v[1]], &pc = pts_[v[2]], &pd = pts_[d];
    const double ax = pa.x - pd.x, ay = pa.y - pd.y;
    const double bx = pb.x - pd.x, by = pb.y - pd.y;
    const double cx = pc.x - pd.x, cy = pc.y - pd.y;
    const double t1 = (ax * ax + ay * ay) * (bx * cy - cx * by);
    const double t2 = (bx * bx + by * by) * (ax * cy - cx * ay);
    const double t3 = (cx * cx + cy * cy) * (ax * by - bx * ay);
    const double det = t1 - t2 + t3;
    // Threshold against the terms actually summed, a forward-error bound
    // that stays meaningful when one point is a far super-triangle corner.
    const double mag = std::fabs(t1) + std::fabs(t2) + std::fabs(t3);
    return det > 1e-12 * mag;
  }

  void legalize(int vi, std::vector<std::pair<int, int>>& stack) {
    long flips = 0;
    const long flip_cap = 4 * static_cast<long>(tris_.size()) + 1024;
    while (!stack.empty()) {
      const auto [t, s] = stack.back();
      stack.pop_back();
      if (!tris_[t].alive || tris_[t].v[s] != vi) continue;
      const int u = tris_[t].n[s];
      if (u < 0) continue;
      const int i = tris_[t].v[(s + 1) % 3];
      const int j = tris_[t].v[(s + 2) % 3];
      const int ku = slot_of_opposite(u, i, j);
      const int d = tris_[u].v[ku];
      if (!in_circumcircle(t, d)) continue;
      if (++flips > flip_cap) break;  // leave locally non-Delaunay but valid

      // Flip edge (i, j) to (vi, d); skip if roundoff would invert a triangle.
      if (cross(pts_[vi], pts_[i], pts_[d]) <= 0.0) continue;
      if (cross(pts_[vi], pts_[d], pts_[j]) <= 0.0) continue;
      const int t_jp = tris_[t].n[(s + 1) % 3];  // across (j, vi)
      const int t_pi = tris_[t].n[(s + 2) % 3];  // across (vi, i)
      const auto un = tris_[u].n;
      const int u_id = un[(ku + 1) % 3];  // across (i, d)
      const int u_dj = un[(ku + 2) % 3];  // across (d, j)
      tris_[t] = {{vi, i, d}, {u_id, u, t_pi}, true};
      tris_[u] = {{vi, d, j}, {u_dj, t_jp, t}, true};
      set_neighbor(u_id, u, t);
      set_neighbor(t_jp, t, u);
      stack.push_back({t, 0});
      stack.push_back({u, 0});
    }
  }

  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  double scale_;
  mutable int hint_ = 0;
};

std::vector<Point2> hex_lattice(const Point2& lo, const Point2& hi, double spacing) {
  std::vector<Point2> out;
  const double dy = spacing * std::sqrt(3.0) / 2.0;
  int row = 0;
  for (double y = lo.y; y <= hi.y + 1e-12; y += dy, ++row) {
    const double off = (row % 2 == 1) ? 0.5 * spacing : 0.0;
    for (double x = lo.x + off; x <= hi.x + 1e-12; x += spacing) {
      out.push_back({x, y});
    }
  }
  return out;
}

}  // namespace

double triangle_area2(const Point2& a, const Point2& b, const Point2& c) {
  return cross(a, b, c);
}

Mesh build_mesh(const std::vector<Point2>& locations, double max_edge, double extension) {
  if (!(max_edge > 0.0)) throw std::invalid_argument("build_mesh: max_edge must be positive");
  if (extension < 0.0) throw std::invalid_argument("build_mesh: extension must be non-negative");
  if (locations.size() < 3) throw InputError("build_mesh: need at least 3 locations");

  // Deduplicate while preserving input order.
  std::vector<Point2> unique;
  Point2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  Point2 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const auto& p : locations) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  const double scale = std::max({hi.x - lo.x, hi.y - lo.y, 1e-9});
  // Merge locations closer than a quarter edge length: near-coincident
  // vertices force slivers, and observations are tied to the mesh through
  // barycentric rows rather than vertex identity.
  const double cutoff2 = std::pow(std::max(0.25 * max_edge, 1e-9 * scale), 2);
  for (const auto& p : locations) {
    bool dup = false;
    for (const auto& q : unique) {
      if (dist2(p, q) <= cutoff2) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(p);
  }
  if (unique.size() < 3) throw InputError("build_mesh: fewer than 3 distinct locations");

  const std::vector<Point2> hull = convex_hull(unique);
  if (hull.size() < 3) throw InputError("build_mesh: locations are collinear");

  Point2 centroid{0.0, 0.0};
  for (const auto& p : hull) {
    centroid.x += p.x;
    centroid.y += p.y;
  }
  centroid.x /= hull.size();
  centroid.y /= hull.size();

  // Boundary ring on the inflated circumscribed circle. A circle avoids the
  // collinear chains of a scaled hull polygon, which breed degenerate
  // boundary triangles.
  std::vector<Point2> ring;
  const double band_edge = 2.0 * max_edge;
  if (extension > 0.0) {
    double r_hull = 0.0;
    for (const auto& p : hull) r_hull = std::max(r_hull, std::sqrt(dist2(p, centroid)));
    const double r_ring = (1.0 + extension) * r_hull;
    const int segs =
        std::max(8, static_cast<int>(std::ceil(2.0 * M_PI * r_ring / (0.9 * band_edge))));
    for (int s = 0; s < segs; ++s) {
      const double a = 2.0 * M_PI * s / segs;
      ring.push_back({centroid.x + r_ring * std::cos(a), centroid.y + r_ring * std::sin(a)});
    }
  }

  // Interior fill: hex lattice thinned against existing points so the
  // triangulation stays well spaced.
  const double h_in = 0.85 * max_edge;
  std::vector<Point2> fill;
  {
    auto cand = hex_lattice(lo, hi, h_in);
    const double keep2 = 0.45 * h_in * 0.45 * h_in;
    for (const auto& p : cand) {
      if (!in_convex_polygon(hull, p, 1e-12 * scale * scale)) continue;
      bool near = false;
      for (const auto& q : unique)
        if (dist2(p, q) < keep2) {
          near = true;
          break;
        }
      if (!near)
        for (const auto& q : ring)
          if (dist2(p, q) < keep2) {
            near = true;
            break;
          }
      if (!near) fill.push_back(p);
    }
  }
  // Coarser fill for the extension band; the ring itself (in order) bounds it.
  std::vector<Point2> band_fill;
  if (extension > 0.0) {
    const double h_out = 0.85 * band_edge;
    auto cand = hex_lattice({centroid.x - (1.0 + extension) * scale,
                             centroid.y - (1.0 + extension) * scale},
                            {centroid.x + (1.0 + extension) * scale,
                             centroid.y + (1.0 + extension) * scale},
                            h_out);
    // The circumscribed ring can reach beyond the box above; widen to cover it.
    if (!ring.empty()) {
      Point2 rlo = ring[0], rhi = ring[0];
      for (const auto& p : ring) {
        rlo.x = std::min(rlo.x, p.x);
        rlo.y = std::min(rlo.y, p.y);
        rhi.x = std::max(rhi.x, p.x);
        rhi.y = std::max(rhi.y, p.y);
      }
      cand = hex_lattice(rlo, rhi, h_out);
    }
    const double keep2 = 0.45 * h_out * 0.45 * h_out;
    for (const auto& p : cand) {
      if (!in_convex_polygon(ring, p, 0.0)) continue;
      if (in_convex_polygon(hull, p, 1e-12 * scale * scale)) continue;
      bool near = false;
      for (const auto& q : ring)
        if (dist2(p, q) < keep2) {
          near = true;
          break;
        }
      if (!near)
        for (const auto& q : unique)
          if (dist2(p, q) < keep2) {
            near = true;
            break;
          }
      if (!near) band_fill.push_back(p);
    }
  }

  Point2 tlo = lo, thi = hi;
  for (const auto& p : ring) {
    tlo.x = std::min(tlo.x, p.x);
    tlo.y = std::min(tlo.y, p.y);
    thi.x = std::max(thi.x, p.x);
    thi.y = std::max(thi.y, p.y);
  }
  Triangulator tri(tlo, thi);
  for (const auto& p : unique) tri.add_point(p);
  for (const auto& p : ring) tri.add_point(p);
  for (const auto& p : fill) tri.add_point(p);
  for (const auto& p : band_fill) tri.add_point(p);

  // Refinement. Size pass: split the globally longest over-budget edge
  // (interior budget max_edge, extension band 2x). Quality pass: insert the
  // circumcenter of the worst thin triangle, Ruppert style, falling back to
  // the longest-edge midpoint when the circumcenter leaves the domain or
  // duplicates a vertex.
  auto budget_of = [&](const Point2& a, const Point2& b, const Point2& c) {
    if (extension <= 0.0) return max_edge;
    const Point2 cen{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    return in_convex_polygon(hull, cen, 1e-12 * scale * scale) ? max_edge : band_edge;
  };
  const std::vector<Point2>& domain = extension > 0.0 ? ring : hull;
  const double min_angle_rad = 14.0 * M_PI / 180.0;
  auto on_domain_boundary = [&](const Point2& p) {
    for (size_t i = 0; i < domain.size(); ++i) {
      const Point2& a = domain[i];
      const Point2& b = domain[(i + 1) % domain.size()];
      const double vx = b.x - a.x, vy = b.y - a.y;
      const double t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / (vx * vx + vy * vy),
                                  0.0, 1.0);
      const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
      if (dx * dx + dy * dy < 1e-16 * scale * scale) return true;
    }
    return false;
  };
  int quality_budget = 4000;
  std::set<std::array<int, 3>> quality_skip;
  std::set<std::pair<long long, long long>> attempted;
  auto quantize = [&](const Point2& p) {
    return std::make_pair(static_cast<long long>(std::llround(p.x / (1e-9 * scale))),
                          static_cast<long long>(std::llround(p.y / (1e-9 * scale))));
  };
  for (int iter = 0; iter < 40000; ++iter) {
    double worst_size = 0.0, worst_quality = min_angle_rad;
    Point2 size_mid{}, quality_cc{};
    std::array<int, 3> quality_key{};
    tri.for_each_triangle([&](int a, int b, int c) {
      const Point2 &pa = tri.point(a), &pb = tri.point(b), &pc = tri.point(c);
      const double budget = budget_of(pa, pb, pc);
      const std::pair<const Point2*, const Point2*> edges[3] = {
          {&pa, &pb}, {&pb, &pc}, {&pc, &pa}};
      double longest = 0.0;
      Point2 longest_mid{};
      for (const auto& e : edges) {
        const double len = std::sqrt(dist2(*e.first, *e.second));
        if (len > longest) {
          longest = len;
          longest_mid = {0.5 * (e.first->x + e.second->x), 0.5 * (e.first->y + e.second->y)};
        }
        if (len > budget && len - budget > worst_size) {
          worst_size = len - budget;
          size_mid = longest_mid;
        }
      }
      // Quality targeting skips boundary-touching triangles (shallow hull
      // angles are an input feature; chasing them cascades) and triangles
      // already far below the sizing scale.
      if (longest < 0.05 * max_edge) return;
      if (on_domain_boundary(pa) || on_domain_boundary(pb) || on_domain_boundary(pc)) return;
      std::array<int, 3> key{a, b, c};
      std::sort(key.begin(), key.end());
      if (quality_skip.count(key)) return;
      const double lab = std::sqrt(dist2(pa, pb)), lbc = std::sqrt(dist2(pb, pc)),
                   lca = std::sqrt(dist2(pc, pa));
      const double min_angle = std::min(
          {std::acos(std::clamp((lab * lab + lca * lca - lbc * lbc) / (2 * lab * lca), -1.0, 1.0)),
           std::acos(std::clamp((lab * lab + lbc * lbc - lca * lca) / (2 * lab * lbc), -1.0, 1.0)),
           std::acos(std::clamp((lbc * lbc + lca * lca - lab * lab) / (2 * lbc * lca), -1.0, 1.0))});
      if (min_angle < worst_quality) {
        worst_quality = min_angle;
        const double d = 2.0 * cross(pa, pb, pc);
        const double a2 = pa.x * pa.x + pa.y * pa.y, b2 = pb.x * pb.x + pb.y * pb.y,
                     c2 = pc.x * pc.x + pc.y * pc.y;
        quality_cc = {(a2 * (pb.y - pc.y) + b2 * (pc.y - pa.y) + c2 * (pa.y - pb.y)) / d,
                      (a2 * (pc.x - pb.x) + b2 * (pa.x - pc.x) + c2 * (pb.x - pa.x)) / d};
        quality_key = key;
      }
    });

    Point2 insert{};
    const bool size_pass = worst_size > 0.0;
    if (size_pass) {
      insert = size_mid;
    } else if (worst_quality < min_angle_rad && quality_budget > 0) {
      if (!in_convex_polygon(domain, quality_cc, 0.0)) {
        quality_skip.insert(quality_key);
        continue;
      }
      insert = quality_cc;
    } else {
      break;
    }
    if (!attempted.insert(quantize(insert)).second) {
      // Re-proposed point: the size bound must always make progress, the
      // quality target is best effort.
      if (size_pass) throw NumericalError("build_mesh: edge refinement stalled");
      quality_skip.insert(quality_key);
      continue;
    }
    tri.add_point(insert);
    if (!size_pass) --quality_budget;
    if (iter == 39999) throw NumericalError("build_mesh: refinement did not terminate");
  }

  Mesh mesh = tri.extract(extension);
  if (mesh.triangles.empty()) throw InputError("build_mesh: degenerate input (no triangles)");
  return mesh;
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.n_vertices = static_cast<int>(mesh.vertices.size());
  s.n_triangles = static_cast<int>(mesh.triangles.size());
  s.min_angle_deg = 180.0;
  for (const auto& t : mesh.triangles) {
    const Point2 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    s.total_area += 0.5 * std::fabs(triangle_area2(a, b, c));
    const double ab = std::sqrt(dist2(a, b)), bc = std::sqrt(dist2(b, c)),
                 ca = std::sqrt(dist2(c, a));
    s.max_edge = std::max({s.max_edge, ab, bc, ca});
    const double angles[3] = {
        std::acos(std::clamp((ab * ab + ca * ca - bc * bc) / (2 * ab * ca), -1.0, 1.0)),
        std::acos(std::clamp((ab * ab + bc * bc - ca * ca) / (2 * ab * bc), -1.0, 1.0)),
        std::acos(std::clamp((bc * bc + ca * ca - ab * ab) / (2 * bc * ca), -1.0, 1.0))};
    for (double ang : angles) s.min_angle_deg = std::min(s.min_angle_deg, ang * 180.0 / M_PI);
  }
  return s;
}

MeshLocator::MeshLocator(const Mesh& mesh) : mesh_(mesh) {
  neighbors_.assign(mesh.triangles.size(), {-1, -1, -1});
  std::map<std::pair<int, int>, std::pair<int, int>> edge_owner;  // edge -> (tri, slot)
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& v = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      auto it = edge_owner.find({a, b});
      if (it == edge_owner.end()) {
        edge_owner[{a, b}] = {t, k};
      } else {
        neighbors_[t][k] = it->second.first;
        neighbors_[it->second.first][it->second.second] = t;
      }
    }
  }
}

MeshLocator::Hit MeshLocator::locate(const Point2& p) const {
  auto barycentric = [&](int t, std::array<double, 3>& lam) {
    const auto& v = mesh_.triangles[t];
    const Point2 &a = mesh_.vertices[v[0]], &b = mesh_.vertices[v[1]], &c = mesh_.vertices[v[2]];
    const double area = triangle_area2(a, b, c);
    lam[0] = triangle_area2({p.x, p.y}, b, c) / area;
    lam[1] = triangle_area2(a, {p.x, p.y}, c) / area;
    lam[2] = triangle_area2(a, b, {p.x, p.y}) / area;
  };

  const int n = static_cast<int>(mesh_.triangles.size());
  int t = last_hit_ >= 0 && last_hit_ < n ? last_hit_ : 0;
  std::array<double, 3> lam{};
  for (int step = 0; step < n + 8; ++step) {
    barycentric(t, lam);
    const int worst = static_cast<int>(std::min_element(lam.begin(), lam.end()) - lam.begin());
    if (lam[worst] >= -1e-12) {
      last_hit_ = t;
      return {t, lam};
    }
    const int next = neighbors_[t][worst];
    if (next < 0) break;  // walked off the hull; rescan exactly
    t = next;
  }
  // Exact-orientation fallback over all triangles.
  for (int s = 0; s < n; ++s) {
    barycentric(s, lam);
    if (*std::min_element(lam.begin(), lam.end()) >= -1e-9) {
      last_hit_ = s;
      return {s, lam};
    }
  }
  return {};
}

void save_mesh(const Mesh& mesh, std::ostream& out) {
  out << "# gcspde mesh, extension " << mesh.boundary_extension << "\n";
  char buf[96];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v.x, v.y);
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    out << "t " << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
}

Mesh load_mesh(std::istream& in) {
  Mesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    char tag = 0;
    ss >> tag;
    if (tag == 'v') {
      Point2 p;
      if (!(ss >> p.x >> p.y)) throw InputError("mesh load: bad vertex at line " + std::to_string(lineno));
      mesh.vertices.push_back(p);
    } else if (tag == 't') {
      std::array<int, 3> t{};
      if (!(ss >> t[0] >> t[1] >> t[2]))
        throw InputError("mesh load: bad triangle at line " + std::to_string(lineno));
      for (int k : t)
        if (k < 0 || k >= static_cast<int>(mesh.vertices.size()))
          throw InputError("mesh load: triangle index out of range at line " + std::to_string(lineno));
      mesh.triangles.push_back(t);
    } else {
      throw InputError("mesh load: unknown record at line " + std::to_string(lineno));
    }
  }
  return mesh;
}

void save_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for write: " + path);
  save_mesh(mesh, out);
}

Mesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open: " + path);
  return load_mesh(in);
}

}  // namespace gcspde
