#include "vdmforge/flatten.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include "vdmforge/errors.hpp"
#include "vdmforge/sparse.hpp"

namespace vdmforge {

Vec2 Plane::to_plane(const Vec3& p) const {
  return {dot(p, tangent), dot(p, bitangent)};
}

Vec3 Plane::from_plane(const Vec2& q) const {
  return normal * offset + tangent * q.x + bitangent * q.y;
}

PartPatch analyze_part(const TriMesh& mesh) {
  validate_mesh(mesh);
  auto loops = boundary_loops(mesh);
  if (loops.size() != 1)
    throw DataError("part must have exactly one boundary loop, found " +
                    std::to_string(loops.size()));
  PartPatch patch;
  patch.mesh = mesh;
  patch.boundary = loops[0];

  std::vector<char> on_boundary(mesh.vertices.size(), 0);
  for (int v : patch.boundary.vertex_indices) on_boundary[v] = 1;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (!on_boundary[v]) patch.interior.push_back(v);

  std::set<std::pair<int, int>> edges;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      auto key = std::minmax(tri[k], tri[(k + 1) % 3]);
      edges.insert({key.first, key.second});
    }
  }
  patch.edges.assign(edges.begin(), edges.end());
  return patch;
}

Plane fit_plane(const std::vector<Vec3>& points, const Vec3* orient_toward) {
  if (points.size() < 3) throw DataError("plane fit needs at least 3 points");
  Vec3 centroid{0, 0, 0};
  for (const auto& p : points) centroid += p;
  centroid = centroid / static_cast<double>(points.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    Eigen::Vector3d d(p.x - centroid.x, p.y - centroid.y, p.z - centroid.z);
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const auto& evals = eig.eigenvalues();  // ascending
  if (evals[2] <= 0.0 || evals[1] <= 1e-12 * evals[2])
    throw DataError("plane fit is rank deficient (collinear or coincident points)");

  auto fix_sign = [](Vec3 v) {
    int dominant = 0;
    for (int a = 1; a < 3; ++a)
      if (std::abs(v[a]) > std::abs(v[dominant])) dominant = a;
    return v[dominant] < 0.0 ? -v : v;
  };

  Plane plane;
  Eigen::Vector3d n = eig.eigenvectors().col(0);
  Eigen::Vector3d t = eig.eigenvectors().col(2);
  plane.normal = fix_sign(normalized({n.x(), n.y(), n.z()}));
  if (orient_toward && dot(*orient_toward - centroid, plane.normal) < 0.0)
    plane.normal = -plane.normal;
  plane.tangent = fix_sign(normalized({t.x(), t.y(), t.z()}));
  // Re-orthogonalize against the normal for numerical safety.
  plane.tangent = normalized(plane.tangent - plane.normal * dot(plane.tangent, plane.normal));
  plane.bitangent = cross(plane.normal, plane.tangent);
  plane.offset = dot(plane.normal, centroid);
  return plane;
}

std::vector<Vec3> project_boundary(const PartPatch& patch, const Plane& plane) {
  std::vector<Vec3> out;
  out.reserve(patch.boundary.vertex_indices.size());
  for (int v : patch.boundary.vertex_indices)
    out.push_back(plane.project(patch.mesh.vertices[v]));
  return out;
}

double edge_preservation_energy(const PartPatch& patch, const std::vector<Vec3>& deformed) {
  double e = 0.0;
  for (const auto& [p, q] : patch.edges) {
    Vec3 d = (deformed[p] - deformed[q]) - (patch.mesh.vertices[p] - patch.mesh.vertices[q]);
    e += norm2(d);
  }
  return e;
}

TriMesh deform_to_boundary(const PartPatch& patch, const std::vector<Vec3>& Bprime) {
  const auto& B = patch.boundary.vertex_indices;
  if (Bprime.size() != B.size())
    throw DataError("boundary target count " + std::to_string(Bprime.size()) +
                    " does not match loop size " + std::to_string(B.size()));

  TriMesh out = patch.mesh;
  for (size_t i = 0; i < B.size(); ++i) out.vertices[B[i]] = Bprime[i];
  if (patch.interior.empty()) return out;

  auto adj = vertex_adjacency(patch.mesh);

  // Interior components must reach the boundary or the system is singular.
  std::vector<char> reached(patch.mesh.vertices.size(), 0);
  std::queue<int> frontier;
  for (int v : B) {
    reached[v] = 1;
    frontier.push(v);
  }
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    for (int w : adj[v])
      if (!reached[w]) {
        reached[w] = 1;
        frontier.push(w);
      }
  }
  for (int v : patch.interior)
    if (!reached[v])
      throw DataError("interior vertex " + std::to_string(v) +
                      " is disconnected from the boundary (singular system)");

  const int na = static_cast<int>(patch.interior.size());
  std::vector<int> interior_id(patch.mesh.vertices.size(), -1);
  for (int i = 0; i < na; ++i) interior_id[patch.interior[i]] = i;
  std::vector<char> is_boundary(patch.mesh.vertices.size(), 0);
  for (int v : B) is_boundary[v] = 1;

  CsrMatrix L;
  L.n = na;
  L.row_start.assign(na + 1, 0);
  for (int i = 0; i < na; ++i) {
    int v = patch.interior[i];
    int entries = 1;  // diagonal
    for (int w : adj[v])
      if (!is_boundary[w]) ++entries;
    L.row_start[i + 1] = L.row_start[i] + entries;
  }
  L.col.resize(L.row_start[na]);
  L.val.resize(L.row_start[na]);
  for (int i = 0; i < na; ++i) {
    int v = patch.interior[i];
    int k = L.row_start[i];
    L.col[k] = i;
    L.val[k] = static_cast<double>(adj[v].size());
    ++k;
    for (int w : adj[v]) {
      if (!is_boundary[w]) {
        L.col[k] = interior_id[w];
        L.val[k] = -1.0;
        ++k;
      }
    }
  }

  // rhs per coordinate: L x_original plus pinned boundary contributions.
  std::map<int, Vec3> bprime_of;
  for (size_t i = 0; i < B.size(); ++i) bprime_of[B[i]] = Bprime[i];
  for (int coord = 0; coord < 3; ++coord) {
    std::vector<double> rhs(na);
    for (int i = 0; i < na; ++i) {
      int v = patch.interior[i];
      double acc = static_cast<double>(adj[v].size()) * patch.mesh.vertices[v][coord];
      for (int w : adj[v]) {
        acc -= patch.mesh.vertices[w][coord];
        if (is_boundary[w]) acc += bprime_of[w][coord];
      }
      rhs[i] = acc;
    }
    std::vector<double> x;
    CgResult res = conjugate_gradient(L, rhs, x, 1e-10, 10 * na + 10);
    if (!res.converged)
      throw NumericError("deformation solve did not converge (relative residual " +
                         std::to_string(res.relative_residual) + ")");
    for (int i = 0; i < na; ++i) out.vertices[patch.interior[i]][coord] = x[i];
  }
  return out;
}

namespace {

double polygon_signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    double v = cross(q - p, r - p);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4;
}

bool polygon_self_intersects(const std::vector<Vec2>& poly) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      // Skip adjacent segments (they share an endpoint).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
        return true;
    }
  }
  return false;
}

// Face removal by centroid can leave kept islands inside the hole and
// pinched vertices where the hole touches itself diagonally. Keep only the
// face component reachable from the tile corner and widen the hole at every
// pinch until the hole boundary is simple.
void cleanup_grid_hole(const TriMesh& grid, std::vector<char>& kept) {
  const int nf = grid.triangle_count();
  auto face_edges = [&](int f) {
    std::array<std::pair<int, int>, 3> out;
    for (int k = 0; k < 3; ++k) {
      auto key = std::minmax(grid.triangles[f][k], grid.triangles[f][(k + 1) % 3]);
      out[k] = {key.first, key.second};
    }
    return out;
  };

  bool changed = true;
  while (changed) {
    changed = false;

    // Keep only the component reachable from the corner vertex 0.
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (int f = 0; f < nf; ++f)
      if (kept[f])
        for (const auto& e : face_edges(f)) edge_faces[e].push_back(f);
    std::vector<char> reached(nf, 0);
    std::queue<int> frontier;
    for (int f = 0; f < nf && frontier.empty(); ++f) {
      if (!kept[f]) continue;
      for (int k = 0; k < 3; ++k)
        if (grid.triangles[f][k] == 0) {
          reached[f] = 1;
          frontier.push(f);
          break;
        }
    }
    if (frontier.empty()) throw DataError("part footprint swallows the tile corner");
    while (!frontier.empty()) {
      int f = frontier.front();
      frontier.pop();
      for (const auto& e : face_edges(f))
        for (int g : edge_faces[e])
          if (kept[g] && !reached[g]) {
            reached[g] = 1;
            frontier.push(g);
          }
    }
    for (int f = 0; f < nf; ++f)
      if (kept[f] && !reached[f]) {
        kept[f] = 0;
        changed = true;
      }

    // Pinch repair: a vertex whose kept-face fan splits into several
    // edge-connected components sits on a non-simple hole boundary.
    std::map<int, std::vector<int>> vertex_faces;
    for (int f = 0; f < nf; ++f)
      if (kept[f])
        for (int k = 0; k < 3; ++k) vertex_faces[grid.triangles[f][k]].push_back(f);
    for (const auto& [v, faces] : vertex_faces) {
      if (faces.size() < 2) continue;
      // Union faces sharing an edge through v.
      std::map<int, int> id;
      for (size_t i = 0; i < faces.size(); ++i) id[faces[i]] = static_cast<int>(i);
      std::vector<int> parent(faces.size());
      for (size_t i = 0; i < faces.size(); ++i) parent[i] = static_cast<int>(i);
      std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
      };
      std::map<std::pair<int, int>, std::vector<int>> local_edges;
      for (int f : faces)
        for (const auto& e : face_edges(f))
          if (e.first == v || e.second == v) local_edges[e].push_back(f);
      for (const auto& [e, fs] : local_edges)
        for (size_t i = 1; i < fs.size(); ++i)
          parent[find(id[fs[0]])] = find(id[fs[i]]);
      std::set<int> roots;
      for (size_t i = 0; i < faces.size(); ++i) roots.insert(find(static_cast<int>(i)));
      if (roots.size() > 1) {
        // The fan is split only when the hole has eaten into it; a full
        // 6-face interior fan cannot split. Widen the hole at this vertex.
        for (int f : faces) kept[f] = 0;
        changed = true;
      }
    }
  }
}

}  // namespace

StitchResult stitch_to_square(const TriMesh& part, int tile_resolution, double margin) {
  if (tile_resolution < 2) throw DataError("tile resolution must be >= 2");
  if (margin < 0.0 || margin >= 0.5) throw DataError("margin must be in [0, 0.5)");
  PartPatch patch = analyze_part(part);

  std::vector<Vec3> boundary_pts;
  for (int v : patch.boundary.vertex_indices) boundary_pts.push_back(part.vertices[v]);
  Vec3 part_mean{0, 0, 0};
  for (const auto& v : part.vertices) part_mean += v;
  part_mean = part_mean / static_cast<double>(part.vertices.size());
  Plane plane = fit_plane(boundary_pts, &part_mean);

  for (const auto& p : boundary_pts)
    if (std::abs(plane.signed_distance(p)) > 1e-6)
      throw DataError("part boundary is not coplanar (flatten it first)");

  Vec2 center{0, 0};
  for (const auto& p : boundary_pts) center += plane.to_plane(p);
  center = center / static_cast<double>(boundary_pts.size());

  std::vector<Vec2> poly;
  for (const auto& p : boundary_pts) poly.push_back(plane.to_plane(p) - center);
  for (const auto& v : part.vertices) {
    Vec2 q = plane.to_plane(v) - center;
    if (std::abs(q.x) > 0.5 - margin || std::abs(q.y) > 0.5 - margin)
      throw DataError("part footprint exceeds the unit tile minus margin");
  }
  if (polygon_self_intersects(poly))
    throw DataError("part boundary self-intersects in the plane projection");

  // Unit-square grid on the plane: (R+1)^2 vertices, 2R^2 faces.
  const int R = tile_resolution;
  TriMesh grid;
  auto grid_pos = [&](int i, int j) {
    return Vec2{-0.5 + static_cast<double>(i) / R, -0.5 + static_cast<double>(j) / R};
  };
  for (int j = 0; j <= R; ++j)
    for (int i = 0; i <= R; ++i)
      grid.vertices.push_back(plane.from_plane(center + grid_pos(i, j)));
  auto vid = [&](int i, int j) { return j * (R + 1) + i; };
  auto cell_center = [&](int i, int j, bool upper) {
    Vec2 a = grid_pos(i, j), b = grid_pos(i + 1, j), c = grid_pos(i + 1, j + 1),
         d = grid_pos(i, j + 1);
    // Lower triangle (a,b,c), upper triangle (a,c,d); CCW in plane coords.
    return upper ? (a + c + d) / 3.0 : (a + b + c) / 3.0;
  };
  std::vector<char> kept;
  for (int j = 0; j < R; ++j) {
    for (int i = 0; i < R; ++i) {
      grid.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      kept.push_back(!point_in_polygon(cell_center(i, j, false), poly));
      grid.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      kept.push_back(!point_in_polygon(cell_center(i, j, true), poly));
    }
  }
  if (std::find(kept.begin(), kept.end(), char(0)) == kept.end())
    throw DataError("part footprint is smaller than one grid cell; raise tile resolution");
  cleanup_grid_hole(grid, kept);
  {
    std::vector<std::array<int, 3>> remaining;
    for (size_t f = 0; f < grid.triangles.size(); ++f)
      if (kept[f]) remaining.push_back(grid.triangles[f]);
    grid.triangles = std::move(remaining);
  }

  auto grid_loops = boundary_loops(grid);
  if (grid_loops.size() != 2)
    throw DataError("grid hole is not a single loop (part boundary too concave for the "
                    "tile resolution); found " +
                    std::to_string(grid_loops.size()) + " loops");
  // The outer loop contains grid corner 0.
  const BoundaryLoop& hole =
      std::find(grid_loops[0].vertex_indices.begin(), grid_loops[0].vertex_indices.end(), 0) !=
              grid_loops[0].vertex_indices.end()
          ? grid_loops[1]
          : grid_loops[0];

  // Assemble output: referenced grid vertices, then all part vertices.
  StitchResult result;
  TriMesh& out = result.mesh;
  std::vector<int> grid_remap(grid.vertices.size(), -1);
  auto map_grid_vertex = [&](int v) {
    if (grid_remap[v] < 0) {
      grid_remap[v] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(grid.vertices[v]);
    }
    return grid_remap[v];
  };
  for (const auto& tri : grid.triangles)
    out.triangles.push_back(
        {map_grid_vertex(tri[0]), map_grid_vertex(tri[1]), map_grid_vertex(tri[2])});
  for (int v : hole.vertex_indices) map_grid_vertex(v);

  const int part_base = static_cast<int>(out.vertices.size());
  result.part_vertex_base = part_base;
  out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());

  // Part faces oriented to bulge toward +n.
  Vec3 part_normal_sum{0, 0, 0};
  for (int t = 0; t < part.triangle_count(); ++t)
    part_normal_sum += triangle_normal(part, t) * triangle_area(part, t);
  const bool flip_part = dot(part_normal_sum, plane.normal) < 0.0;
  for (const auto& tri : part.triangles) {
    if (flip_part)
      out.triangles.push_back({part_base + tri[0], part_base + tri[2], part_base + tri[1]});
    else
      out.triangles.push_back({part_base + tri[0], part_base + tri[1], part_base + tri[2]});
  }

  // Zippering: both rings traversed counterclockwise in plane coordinates so
  // the greedy march advances them in the same angular direction.
  std::vector<int> hole_ring;  // output indices
  for (int v : hole.vertex_indices) hole_ring.push_back(grid_remap[v]);
  std::vector<int> part_ring;
  for (int v : patch.boundary.vertex_indices) part_ring.push_back(part_base + v);

  auto ring_poly = [&](const std::vector<int>& ring) {
    std::vector<Vec2> p;
    for (int v : ring) p.push_back(plane.to_plane(out.vertices[v]) - center);
    return p;
  };
  std::vector<Vec2> hole2 = ring_poly(hole_ring);
  if (polygon_signed_area(hole2) < 0.0) {
    std::reverse(hole_ring.begin(), hole_ring.end());
    std::reverse(hole2.begin(), hole2.end());
  }
  std::vector<Vec2> part2 = ring_poly(part_ring);
  if (polygon_signed_area(part2) < 0.0) {
    std::reverse(part_ring.begin(), part_ring.end());
    std::reverse(part2.begin(), part2.end());
  }

  // Start at the closest hole/part vertex pair.
  const int nh = static_cast<int>(hole_ring.size());
  const int np = static_cast<int>(part_ring.size());
  int h0 = 0, p0 = 0;
  double best = std::numeric_limits<double>::max();
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < np; ++j) {
      double d = norm(hole2[i] - part2[j]);
      if (d < best) {
        best = d;
        h0 = i;
        p0 = j;
      }
    }

  result.seam_vertices = part_ring;
  int hi = 0, pj = 0;  // advances taken on each ring
  while (hi < nh || pj < np) {
    int hcur = (h0 + hi) % nh, pcur = (p0 + pj) % np;
    int hnext = (h0 + hi + 1) % nh, pnext = (p0 + pj + 1) % np;
    bool advance_hole;
    if (hi >= nh)
      advance_hole = false;
    else if (pj >= np)
      advance_hole = true;
    else
      advance_hole = norm(hole2[hnext] - part2[pcur]) <= norm(hole2[hcur] - part2[pnext]);
    if (advance_hole) {
      out.triangles.push_back({hole_ring[hcur], hole_ring[hnext], part_ring[pcur]});
      ++hi;
    } else {
      out.triangles.push_back({hole_ring[hcur], part_ring[pnext], part_ring[pcur]});
      ++pj;
    }
  }

#ifdef VDMFORGE_STITCH_DEBUG
  {
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (size_t t = 0; t < out.triangles.size(); ++t)
      for (int k = 0; k < 3; ++k) {
        auto key = std::minmax(out.triangles[t][k], out.triangles[t][(k + 1) % 3]);
        edge_tris[{key.first, key.second}].push_back(static_cast<int>(t));
      }
    for (const auto& [e, ts] : edge_tris)
      if (ts.size() > 2) {
        fprintf(stderr, "BAD EDGE (%d,%d) part_base=%d tris:", e.first, e.second,
                part_base);
        for (int t : ts)
          fprintf(stderr, " [%d: %d %d %d]", t, out.triangles[t][0], out.triangles[t][1],
                  out.triangles[t][2]);
        fprintf(stderr, "\n");
      }
  }
#endif
  auto out_loops = boundary_loops(out);
  if (out_loops.size() != 1)
    throw DataError("stitched mesh has " + std::to_string(out_loops.size()) +
                    " boundary loops, expected 1");
  validate_mesh(out);
  return result;
}

TriMesh augment(const TriMesh& part, const Vec2& translation, double scale,
                double rotation) {
  if (scale <= 0.0) throw DataError("scale must be positive");
  if (translation.x == 0.0 && translation.y == 0.0 && scale == 1.0 && rotation == 0.0)
    return part;  // exact identity

  PartPatch patch = analyze_part(part);
  std::vector<Vec3> boundary_pts;
  for (int v : patch.boundary.vertex_indices) boundary_pts.push_back(part.vertices[v]);
  Vec3 part_mean{0, 0, 0};
  for (const auto& v : part.vertices) part_mean += v;
  part_mean = part_mean / static_cast<double>(part.vertices.size());
  Plane plane = fit_plane(boundary_pts, &part_mean);

  Vec2 center{0, 0};
  for (const auto& p : boundary_pts) center += plane.to_plane(p);
  center = center / static_cast<double>(boundary_pts.size());

  const double cs = std::cos(rotation), sn = std::sin(rotation);
  TriMesh out = part;
  for (auto& v : out.vertices) {
    double height = plane.signed_distance(v);
    Vec2 q = plane.to_plane(v) - center;
    Vec2 r{cs * q.x - sn * q.y, sn * q.x + cs * q.y};
    r = r * scale + translation;
    if (std::abs(r.x) > 0.5 || std::abs(r.y) > 0.5)
      throw DataError("augmented footprint leaves the unit tile");
    v = plane.from_plane(center + r) + plane.normal * (height * scale);
  }
  return out;
}

}  // namespace vdmforge
