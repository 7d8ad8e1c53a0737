#include "vdmforge/mesh.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <queue>
#include <set>

#include "vdmforge/errors.hpp"

namespace vdmforge {

void validate_mesh(const TriMesh& mesh) {
  const int nv = mesh.vertex_count();
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv)
        throw DataError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(tri[k]) + " of " + std::to_string(nv));
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw DataError("triangle " + std::to_string(t) + " repeats a vertex index");
  }
  if (!mesh.uvs.empty() && mesh.uvs.size() != mesh.vertices.size())
    throw DataError("uv count " + std::to_string(mesh.uvs.size()) +
                    " does not match vertex count " + std::to_string(mesh.vertices.size()));
  if (!mesh.normals.empty()) {
    if (mesh.normals.size() != mesh.vertices.size())
      throw DataError("normal count does not match vertex count");
    for (size_t i = 0; i < mesh.normals.size(); ++i) {
      if (std::abs(norm(mesh.normals[i]) - 1.0) > 1e-6)
        throw DataError("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

Vec3 triangle_normal(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
  Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
  return normalized(cross(e1, e2));
}

double triangle_area(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
  Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
  return 0.5 * norm(cross(e1, e2));
}

Vec3 triangle_centroid(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  return (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
}

double total_area(const TriMesh& mesh) {
  double a = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) a += triangle_area(mesh, t);
  return a;
}

std::vector<BoundaryLoop> boundary_loops(const TriMesh& mesh) {
  // Incidence count per undirected edge; boundary edges have exactly one.
  std::map<std::pair<int, int>, int> incidence;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      auto key = std::minmax(a, b);
      int n = ++incidence[{key.first, key.second}];
      if (n > 2)
        throw DataError("non-manifold edge (" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ") has >2 incident triangles");
    }
  }

  // Boundary edges keep the direction they have inside their single triangle,
  // so walking them traverses each loop with the surface on a consistent side.
  std::map<int, std::set<int>> outgoing;  // start vertex -> end vertices
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      auto key = std::minmax(a, b);
      if (incidence[{key.first, key.second}] == 1) outgoing[a].insert(b);
    }
  }

  std::vector<BoundaryLoop> loops;
  while (!outgoing.empty()) {
    int start = outgoing.begin()->first;
    BoundaryLoop loop;
    int v = start;
    while (true) {
      loop.vertex_indices.push_back(v);
      auto it = outgoing.find(v);
      if (it == outgoing.end() || it->second.empty())
        throw DataError("boundary walk stuck at vertex " + std::to_string(v));
      int next = *it->second.begin();
      it->second.erase(it->second.begin());
      if (it->second.empty()) outgoing.erase(it);
      v = next;
      if (v == start) break;
    }
    // Rotate so the loop starts at its smallest vertex.
    auto mn = std::min_element(loop.vertex_indices.begin(), loop.vertex_indices.end());
    std::rotate(loop.vertex_indices.begin(), mn, loop.vertex_indices.end());
    std::set<int> uniq(loop.vertex_indices.begin(), loop.vertex_indices.end());
    if (uniq.size() != loop.vertex_indices.size())
      throw DataError("boundary loop revisits a vertex (pinched boundary)");
    loops.push_back(std::move(loop));
  }
  std::sort(loops.begin(), loops.end(), [](const BoundaryLoop& a, const BoundaryLoop& b) {
    return a.vertex_indices[0] < b.vertex_indices[0];
  });
  return loops;
}

std::vector<std::vector<int>> vertex_adjacency(const TriMesh& mesh) {
  std::vector<std::set<int>> adj(mesh.vertices.size());
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      adj[a].insert(b);
      adj[b].insert(a);
    }
  }
  std::vector<std::vector<int>> out(adj.size());
  for (size_t i = 0; i < adj.size(); ++i) out[i].assign(adj[i].begin(), adj[i].end());
  return out;
}

std::vector<int> select_near_vertices(const TriMesh& mesh, const std::vector<int>& seeds,
                                      int rings) {
  auto adj = vertex_adjacency(mesh);
  std::vector<int> depth(mesh.vertices.size(), -1);
  std::queue<int> frontier;
  for (int s : seeds) {
    if (s < 0 || s >= mesh.vertex_count())
      throw DataError("seed vertex " + std::to_string(s) + " out of range");
    if (depth[s] != 0) {
      depth[s] = 0;
      frontier.push(s);
    }
  }
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop();
    if (depth[v] >= rings) continue;
    for (int w : adj[v]) {
      if (depth[w] < 0) {
        depth[w] = depth[v] + 1;
        frontier.push(w);
      }
    }
  }
  std::vector<int> out;
  for (size_t i = 0; i < depth.size(); ++i)
    if (depth[i] >= 0) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> select_near_boundary(const TriMesh& mesh, const BoundaryLoop& loop,
                                      int rings) {
  return select_near_vertices(mesh, loop.vertex_indices, rings);
}

TriMesh laplacian_smooth(const TriMesh& mesh, const std::vector<int>& subset,
                         int iterations, double lambda, int* isolated_warnings) {
  if (lambda <= 0.0 || lambda > 1.0) throw DataError("lambda must be in (0,1]");
  auto adj = vertex_adjacency(mesh);
  for (int s : subset) {
    if (s < 0 || s >= mesh.vertex_count())
      throw DataError("subset vertex " + std::to_string(s) + " out of range");
  }

  TriMesh out = mesh;
  std::vector<Vec3> prev = out.vertices;
  int isolated = 0;
  for (int it = 0; it < iterations; ++it) {
    prev = out.vertices;
    for (int v : subset) {
      if (adj[v].empty()) {
        if (it == 0) ++isolated;
        continue;
      }
      Vec3 avg{0, 0, 0};
      for (int w : adj[v]) avg += prev[w];
      avg = avg / static_cast<double>(adj[v].size());
      out.vertices[v] = prev[v] + (avg - prev[v]) * lambda;
    }
  }
  if (isolated_warnings) *isolated_warnings = isolated;
  return out;
}

int euler_characteristic(const TriMesh& mesh) {
  std::set<std::pair<int, int>> edges;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      auto key = std::minmax(tri[k], tri[(k + 1) % 3]);
      edges.insert({key.first, key.second});
    }
  }
  return mesh.vertex_count() - static_cast<int>(edges.size()) + mesh.triangle_count();
}

}  // namespace vdmforge
