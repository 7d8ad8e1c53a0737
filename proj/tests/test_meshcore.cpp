#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "vdmforge/errors.hpp"
#include "vdmforge/mesh.hpp"
#include "vdmforge/mesh_io.hpp"
#include "vdmforge/sampling.hpp"

using namespace vdmforge;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Brute-force boundary edges: undirected edges with exactly one incident
// triangle.
std::set<std::pair<int, int>> boundary_edges_bruteforce(const TriMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) {
      auto key = std::minmax(tri[k], tri[(k + 1) % 3]);
      count[{key.first, key.second}]++;
    }
  std::set<std::pair<int, int>> out;
  for (const auto& [e, c] : count)
    if (c == 1) out.insert(e);
  return out;
}

std::set<std::pair<int, int>> loop_edges(const std::vector<BoundaryLoop>& loops) {
  std::set<std::pair<int, int>> out;
  for (const auto& loop : loops) {
    const auto& v = loop.vertex_indices;
    for (size_t i = 0; i < v.size(); ++i) {
      auto key = std::minmax(v[i], v[(i + 1) % v.size()]);
      out.insert({key.first, key.second});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("load_mesh: minimal OBJ") {
  std::string path = temp_path("minimal.obj");
  write_file(path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  TriMesh m = load_mesh(path);
  CHECK(m.vertex_count() == 3);
  CHECK(m.triangle_count() == 1);
}

TEST_CASE("load_mesh: out-of-range face index") {
  std::string path = temp_path("bad_index.obj");
  write_file(path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n");
  CHECK_THROWS_AS(load_mesh(path), DataError);
}

TEST_CASE("load_mesh: empty mesh rejected") {
  std::string path = temp_path("empty.obj");
  write_file(path, "# nothing here\n");
  CHECK_THROWS_AS(load_mesh(path), DataError);
}

TEST_CASE("save/load: unit square round trip keeps topology") {
  TriMesh m = fixtures::unit_square();
  for (auto fmt : {MeshFormat::Obj, MeshFormat::PlyAscii, MeshFormat::PlyBinary}) {
    std::string path = temp_path(fmt == MeshFormat::Obj ? "sq.obj" : "sq.ply");
    save_mesh(m, path, fmt);
    TriMesh r = load_mesh(path);
    CHECK(r.vertex_count() == m.vertex_count());
    REQUIRE(r.triangle_count() == m.triangle_count());
    for (int t = 0; t < m.triangle_count(); ++t) CHECK(r.triangles[t] == m.triangles[t]);
  }
}

TEST_CASE("save/load: UVs survive the round trip") {
  TriMesh m = fixtures::unit_square();
  m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (auto fmt : {MeshFormat::Obj, MeshFormat::PlyBinary}) {
    std::string path = temp_path(fmt == MeshFormat::Obj ? "uv.obj" : "uv.ply");
    save_mesh(m, path, fmt);
    TriMesh r = load_mesh(path);
    REQUIRE(r.has_uvs());
    for (int i = 0; i < m.vertex_count(); ++i) {
      CHECK(r.uvs[i].x == doctest::Approx(m.uvs[i].x).epsilon(1e-9));
      CHECK(r.uvs[i].y == doctest::Approx(m.uvs[i].y).epsilon(1e-9));
    }
  }
}

TEST_CASE("save/load: binary PLY is bitwise for float32 coordinates") {
  // 10k-vertex patch with float32-representable coordinates.
  TriMesh m = fixtures::random_patch(7, 99, 99);
  REQUIRE(m.vertex_count() == 10000);
  std::string path = temp_path("bits.ply");
  save_mesh(m, path, MeshFormat::PlyBinary);
  TriMesh r = load_mesh(path);
  REQUIRE(r.vertex_count() == m.vertex_count());
  double max_delta = 0.0;
  for (int i = 0; i < m.vertex_count(); ++i)
    max_delta = std::max(max_delta, norm(r.vertices[i] - m.vertices[i]));
  CHECK(max_delta == 0.0);

  // Property: a second save/load cycle is byte-stable.
  std::string path2 = temp_path("bits2.ply");
  save_mesh(r, path2, MeshFormat::PlyBinary);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(f1)), {});
  std::string c2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(c1 == c2);
}

TEST_CASE("save/load: ASCII PLY round trip within 1e-6") {
  TriMesh m = fixtures::random_patch(13, 9, 9);
  std::string path = temp_path("ascii.ply");
  save_mesh(m, path, MeshFormat::PlyAscii);
  TriMesh r = load_mesh(path);
  for (int i = 0; i < m.vertex_count(); ++i)
    CHECK(norm(r.vertices[i] - m.vertices[i]) < 1e-6);
}

TEST_CASE("boundary_loops: watertight cube has none") {
  CHECK(boundary_loops(fixtures::cube()).empty());
}

TEST_CASE("boundary_loops: unit square has one loop of 4") {
  auto loops = boundary_loops(fixtures::unit_square());
  REQUIRE(loops.size() == 1);
  CHECK(loops[0].size() == 4);
}

TEST_CASE("boundary_loops: grid with a removed interior quad has two loops") {
  TriMesh m = fixtures::plane_grid(5, 5);
  // Remove the two triangles of cell (2,2).
  auto vid = [&](int i, int j) { return j * 6 + i; };
  std::vector<std::array<int, 3>> kept;
  for (const auto& tri : m.triangles) {
    bool is_cell = false;
    std::array<int, 3> lower = {vid(2, 2), vid(3, 2), vid(3, 3)};
    std::array<int, 3> upper = {vid(2, 2), vid(3, 3), vid(2, 3)};
    if (tri == lower || tri == upper) is_cell = true;
    if (!is_cell) kept.push_back(tri);
  }
  m.triangles = kept;
  auto loops = boundary_loops(m);
  REQUIRE(loops.size() == 2);
  // Outer loop: 4*5 = 20 vertices; hole: 4.
  std::multiset<int> sizes{loops[0].size(), loops[1].size()};
  CHECK(sizes == std::multiset<int>{4, 20});
  CHECK(loop_edges(loops) == boundary_edges_bruteforce(m));
}

TEST_CASE("boundary_loops: edge set equals brute-force single-incidence edges") {
  for (uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    TriMesh m = fixtures::random_patch(seed, 5, 7);
    CHECK(loop_edges(boundary_loops(m)) == boundary_edges_bruteforce(m));
  }
}

TEST_CASE("boundary_loops: non-manifold edge reported") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, -1, 0}};
  m.triangles = {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}};
  CHECK_THROWS_WITH_AS(boundary_loops(m), doctest::Contains("non-manifold"), DataError);
}

TEST_CASE("sample_surface: single triangle") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}};
  m.triangles = {{0, 1, 2}};
  OrientedPointSet pts = sample_surface(m, 100, 42);
  REQUIRE(pts.size() == 100);
  for (int i = 0; i < 100; ++i) {
    const Vec3& p = pts.points[i];
    CHECK(p.z == doctest::Approx(0.0));
    CHECK(p.x >= -1e-12);
    CHECK(p.y >= -1e-12);
    CHECK(p.x + p.y <= 2.0 + 1e-12);
    CHECK(pts.normals[i] == pts.normals[0]);
  }
}

TEST_CASE("sample_surface: area-weighted selection matches a binomial bound") {
  // Two triangles with area ratio 9:1.
  TriMesh m;
  m.vertices = {{0, 0, 0}, {9, 0, 0}, {0, 2, 0}, {10, 0, 0}, {9, 2, 0}};
  m.triangles = {{0, 1, 2}, {1, 3, 4}};
  REQUIRE(triangle_area(m, 0) == doctest::Approx(9.0));
  REQUIRE(triangle_area(m, 1) == doctest::Approx(1.0));
  const int n = 10000;
  OrientedPointSet pts = sample_surface(m, n, 5);
  int in_big = 0;
  for (const auto& p : pts.points)
    if (p.x + p.y * 4.5 <= 9.0 + 1e-9) ++in_big;  // left of the shared edge
  double expected = 0.9 * n;
  double sigma = std::sqrt(n * 0.9 * 0.1);
  CHECK(std::abs(in_big - expected) <= 3.0 * sigma);
}

TEST_CASE("sample_surface: deterministic for a fixed seed") {
  TriMesh m = fixtures::icosphere(1);
  OrientedPointSet a = sample_surface(m, 500, 77);
  OrientedPointSet b = sample_surface(m, 500, 77);
  for (int i = 0; i < 500; ++i) CHECK(a.points[i] == b.points[i]);
}

TEST_CASE("sample_surface: zero-area mesh is an error") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {1e-9, 0, 0}, {0, 1e-9, 0}};
  m.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(sample_surface(m, 10, 1), NumericError);
}

TEST_CASE("sample_surface: points lie on the host mesh") {
  TriMesh m = fixtures::icosphere(1, 0.8, {0.2, -0.1, 0.4});
  OrientedPointSet pts = sample_surface(m, 2000, 11);
  for (const auto& p : pts.points) {
    // On the sphere within the chord error of the subdivided mesh.
    double r = norm(p - Vec3{0.2, -0.1, 0.4});
    CHECK(r <= 0.8 + 1e-7);
    CHECK(r >= 0.8 * 0.9);
  }
}

TEST_CASE("laplacian_smooth: interior vertex of a regular grid is a fixed point") {
  TriMesh m = fixtures::plane_grid(4, 4);
  int center = 2 * 5 + 2;
  TriMesh s = laplacian_smooth(m, {center}, 3, 1.0);
  CHECK(norm(s.vertices[center] - m.vertices[center]) < 1e-15);
}

TEST_CASE("laplacian_smooth: lifted vertex returns to the neighbor average") {
  TriMesh m = fixtures::plane_grid(4, 4);
  int center = 2 * 5 + 2;
  auto adj = vertex_adjacency(m);
  m.vertices[center].z += 0.5;
  TriMesh s = laplacian_smooth(m, {center}, 1, 1.0);
  Vec3 avg{0, 0, 0};
  for (int w : adj[center]) avg += m.vertices[w];
  avg = avg / static_cast<double>(adj[center].size());
  CHECK(norm(s.vertices[center] - avg) < 1e-15);
}

TEST_CASE("laplacian_smooth: matches the direct recursion oracle") {
  TriMesh m = fixtures::random_patch(21, 6, 6);
  std::vector<int> subset;
  for (int v = 0; v < m.vertex_count(); v += 2) subset.push_back(v);
  TriMesh s = laplacian_smooth(m, subset, 5, 0.4);

  // Direct per-vertex recursion with the same Jacobi semantics.
  auto adj = vertex_adjacency(m);
  std::vector<char> sel(m.vertex_count(), 0);
  for (int v : subset) sel[v] = 1;
  std::vector<Vec3> cur = m.vertices;
  for (int it = 0; it < 5; ++it) {
    std::vector<Vec3> prev = cur;
    for (int v = 0; v < m.vertex_count(); ++v) {
      if (!sel[v] || adj[v].empty()) continue;
      Vec3 avg{0, 0, 0};
      for (int w : adj[v]) avg += prev[w];
      avg = avg / static_cast<double>(adj[v].size());
      cur[v] = prev[v] + (avg - prev[v]) * 0.4;
    }
  }
  double max_delta = 0.0;
  for (int v = 0; v < m.vertex_count(); ++v)
    max_delta = std::max(max_delta, norm(s.vertices[v] - cur[v]));
  CHECK(max_delta < 1e-9);
}

TEST_CASE("laplacian_smooth: isolated vertex warns and stays put") {
  TriMesh m = fixtures::unit_square();
  m.vertices.push_back({5, 5, 5});  // unreferenced by any triangle
  int warnings = 0;
  TriMesh s = laplacian_smooth(m, {4}, 2, 0.5, &warnings);
  CHECK(warnings == 1);
  CHECK(s.vertices[4] == m.vertices[4]);
}

TEST_CASE("laplacian_smooth: stays inside the neighborhood bounding box") {
  TriMesh m = fixtures::random_patch(31, 5, 5);
  auto adj = vertex_adjacency(m);
  std::vector<int> all;
  for (int v = 0; v < m.vertex_count(); ++v) all.push_back(v);
  TriMesh s = laplacian_smooth(m, all, 1, 0.8);
  for (int v = 0; v < m.vertex_count(); ++v) {
    if (adj[v].empty()) continue;
    Vec3 lo = m.vertices[v], hi = m.vertices[v];
    for (int w : adj[v])
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], m.vertices[w][a]);
        hi[a] = std::max(hi[a], m.vertices[w][a]);
      }
    for (int a = 0; a < 3; ++a) {
      CHECK(s.vertices[v][a] >= lo[a] - 1e-12);
      CHECK(s.vertices[v][a] <= hi[a] + 1e-12);
    }
  }
}

TEST_CASE("select_near_boundary: ring expansion") {
  TriMesh m = fixtures::plane_grid(4, 4);
  auto loops = boundary_loops(m);
  REQUIRE(loops.size() == 1);

  auto rings0 = select_near_boundary(m, loops[0], 0);
  std::set<int> s0(rings0.begin(), rings0.end());
  std::set<int> loop_set(loops[0].vertex_indices.begin(), loops[0].vertex_indices.end());
  CHECK(s0 == loop_set);

  // rings=1 against a plain BFS oracle.
  auto rings1 = select_near_boundary(m, loops[0], 1);
  auto adj = vertex_adjacency(m);
  std::set<int> oracle = loop_set;
  for (int v : loop_set)
    for (int w : adj[v]) oracle.insert(w);
  CHECK(std::set<int>(rings1.begin(), rings1.end()) == oracle);

  // rings >= diameter selects everything.
  auto all = select_near_boundary(m, loops[0], 100);
  CHECK(static_cast<int>(all.size()) == m.vertex_count());
}
