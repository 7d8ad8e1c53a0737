#include "vdmforge/mesh_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "vdmforge/errors.hpp"

namespace vdmforge {

namespace {

std::string lower_ext(const std::string& path) {
  auto pos = path.find_last_of('.');
  if (pos == std::string::npos) return "";
  std::string ext = path.substr(pos + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext;
}

[[noreturn]] void parse_fail(const std::string& path, size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

// ---------------------------------------------------------------------------
// OBJ

struct ObjCorner {
  int v = -1, vt = -1, vn = -1;
  bool operator<(const ObjCorner& o) const {
    if (v != o.v) return v < o.v;
    if (vt != o.vt) return vt < o.vt;
    return vn < o.vn;
  }
};

int resolve_index(long idx, size_t count, const std::string& path, size_t line) {
  long r = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (idx == 0 || r < 0 || r >= static_cast<long>(count))
    parse_fail(path, line, "face references element " + std::to_string(idx) + " of " +
                               std::to_string(count));
  return static_cast<int>(r);
}

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::vector<Vec3> positions, normals;
  std::vector<Vec2> uvs;
  std::vector<std::array<ObjCorner, 3>> faces;

  std::string lstr;
  size_t lineno = 0;
  while (std::getline(in, lstr)) {
    ++lineno;
    std::istringstream ls(lstr);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) parse_fail(path, lineno, "malformed vertex record");
      positions.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ls >> t.x >> t.y)) parse_fail(path, lineno, "malformed texcoord record");
      uvs.push_back(t);
    } else if (tag == "vn") {
      Vec3 n;
      if (!(ls >> n.x >> n.y >> n.z)) parse_fail(path, lineno, "malformed normal record");
      normals.push_back(normalized(n));
    } else if (tag == "f") {
      std::vector<ObjCorner> poly;
      std::string corner;
      while (ls >> corner) {
        ObjCorner c;
        long v = 0, vt = 0, vn = 0;
        size_t s1 = corner.find('/');
        if (s1 == std::string::npos) {
          v = std::strtol(corner.c_str(), nullptr, 10);
        } else {
          v = std::strtol(corner.substr(0, s1).c_str(), nullptr, 10);
          size_t s2 = corner.find('/', s1 + 1);
          std::string mid = s2 == std::string::npos ? corner.substr(s1 + 1)
                                                    : corner.substr(s1 + 1, s2 - s1 - 1);
          if (!mid.empty()) vt = std::strtol(mid.c_str(), nullptr, 10);
          if (s2 != std::string::npos && s2 + 1 < corner.size())
            vn = std::strtol(corner.substr(s2 + 1).c_str(), nullptr, 10);
        }
        c.v = resolve_index(v, positions.size(), path, lineno);
        if (vt != 0) c.vt = resolve_index(vt, uvs.size(), path, lineno);
        if (vn != 0) c.vn = resolve_index(vn, normals.size(), path, lineno);
        poly.push_back(c);
      }
      if (poly.size() < 3) parse_fail(path, lineno, "face with fewer than 3 corners");
      for (size_t k = 1; k + 1 < poly.size(); ++k)
        faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (positions.empty() || faces.empty()) throw DataError(path + ": empty mesh");

  // OBJ indexes positions, uvs and normals independently; split vertices so
  // attributes become per-vertex.
  bool any_vt = false, any_vn = false;
  for (const auto& f : faces)
    for (const auto& c : f) {
      any_vt |= c.vt >= 0;
      any_vn |= c.vn >= 0;
    }

  TriMesh mesh;
  if (!any_vt && !any_vn) {
    mesh.vertices = positions;
    for (const auto& f : faces) mesh.triangles.push_back({f[0].v, f[1].v, f[2].v});
  } else {
    std::map<ObjCorner, int> remap;
    for (const auto& f : faces) {
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        auto it = remap.find(f[k]);
        if (it == remap.end()) {
          int idx = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(positions[f[k].v]);
          if (any_vt) mesh.uvs.push_back(f[k].vt >= 0 ? uvs[f[k].vt] : Vec2{0, 0});
          if (any_vn)
            mesh.normals.push_back(f[k].vn >= 0 ? normals[f[k].vn] : Vec3{0, 0, 1});
          it = remap.insert({f[k], idx}).first;
        }
        tri[k] = it->second;
      }
      mesh.triangles.push_back(tri);
    }
  }
  validate_mesh(mesh);
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[256];
  for (const auto& v : mesh.vertices) {
    snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& t : mesh.uvs) {
    snprintf(buf, sizeof(buf), "vt %.9g %.9g\n", t.x, t.y);
    out << buf;
  }
  for (const auto& n : mesh.normals) {
    snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x, n.y, n.z);
    out << buf;
  }
  for (const auto& tri : mesh.triangles) {
    out << "f";
    for (int k = 0; k < 3; ++k) {
      int i = tri[k] + 1;
      out << ' ' << i;
      if (mesh.has_uvs() && mesh.has_normals())
        out << '/' << i << '/' << i;
      else if (mesh.has_uvs())
        out << '/' << i;
      else if (mesh.has_normals())
        out << "//" << i;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// PLY

struct PlyProperty {
  std::string type;  // scalar type, or list count type for lists
  std::string list_item_type;
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  size_t header_bytes = 0;
};

size_t scalar_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw DataError("unknown PLY scalar type " + t);
}

double read_scalar_binary(const char* p, const std::string& t) {
  auto load = [&](auto v) {
    std::memcpy(&v, p, sizeof(v));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load(int8_t{});
  if (t == "uchar" || t == "uint8") return load(uint8_t{});
  if (t == "short" || t == "int16") return load(int16_t{});
  if (t == "ushort" || t == "uint16") return load(uint16_t{});
  if (t == "int" || t == "int32") return load(int32_t{});
  if (t == "uint" || t == "uint32") return load(uint32_t{});
  if (t == "float" || t == "float32") return load(float{});
  return load(double{});
}

PlyHeader parse_ply_header(std::istream& in, const std::string& path) {
  PlyHeader h;
  std::string line;
  size_t lineno = 0;
  size_t bytes = 0;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) parse_fail(path, lineno, "unexpected end of header");
    bytes += line.size() + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next() != "ply") parse_fail(path, lineno, "missing ply magic");
  while (true) {
    std::istringstream ls(next());
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info") continue;
    if (tag == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii")
        h.binary = false;
      else if (fmt == "binary_little_endian")
        h.binary = true;
      else
        parse_fail(path, lineno, "unsupported PLY format " + fmt);
    } else if (tag == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      h.elements.push_back(e);
    } else if (tag == "property") {
      if (h.elements.empty()) parse_fail(path, lineno, "property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        p.is_list = true;
        ls >> p.type >> p.list_item_type >> p.name;
      } else {
        p.type = t;
        ls >> p.name;
      }
      h.elements.back().properties.push_back(p);
    } else if (tag == "end_header") {
      break;
    } else {
      parse_fail(path, lineno, "unknown header record " + tag);
    }
  }
  h.header_bytes = bytes;
  return h;
}

struct PlyData {
  std::vector<Vec3> positions, normals;
  std::vector<Vec2> uvs;
  std::vector<std::array<int, 3>> triangles;
  bool has_normals = false, has_uvs = false;
};

PlyData load_ply_data(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  PlyHeader h = parse_ply_header(in, path);

  PlyData d;
  for (const auto& elem : h.elements) {
    if (elem.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, iu = -1, iv = -1;
      for (size_t p = 0; p < elem.properties.size(); ++p) {
        const std::string& n = elem.properties[p].name;
        if (elem.properties[p].is_list) continue;
        if (n == "x") ix = static_cast<int>(p);
        if (n == "y") iy = static_cast<int>(p);
        if (n == "z") iz = static_cast<int>(p);
        if (n == "nx") inx = static_cast<int>(p);
        if (n == "ny") iny = static_cast<int>(p);
        if (n == "nz") inz = static_cast<int>(p);
        if (n == "u" || n == "s" || n == "texture_u") iu = static_cast<int>(p);
        if (n == "v" || n == "t" || n == "texture_v") iv = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0) throw DataError(path + ": vertex element lacks x/y/z");
      d.has_normals = inx >= 0 && iny >= 0 && inz >= 0;
      d.has_uvs = iu >= 0 && iv >= 0;

      std::vector<double> row(elem.properties.size());
      for (size_t i = 0; i < elem.count; ++i) {
        if (h.binary) {
          for (size_t p = 0; p < elem.properties.size(); ++p) {
            const auto& prop = elem.properties[p];
            if (prop.is_list) throw DataError(path + ": list property in vertex element");
            char buf[8];
            size_t sz = scalar_size(prop.type);
            if (!in.read(buf, sz))
              throw DataError(path + ": truncated vertex data at vertex " + std::to_string(i));
            row[p] = read_scalar_binary(buf, prop.type);
          }
        } else {
          for (size_t p = 0; p < elem.properties.size(); ++p) {
            if (!(in >> row[p]))
              throw DataError(path + ": truncated vertex data at vertex " + std::to_string(i));
          }
        }
        d.positions.push_back({row[ix], row[iy], row[iz]});
        if (d.has_normals) d.normals.push_back(normalized({row[inx], row[iny], row[inz]}));
        if (d.has_uvs) d.uvs.push_back({row[iu], row[iv]});
      }
    } else if (elem.name == "face") {
      if (elem.properties.size() != 1 || !elem.properties[0].is_list)
        throw DataError(path + ": face element must be a single index list");
      const auto& prop = elem.properties[0];
      for (size_t i = 0; i < elem.count; ++i) {
        size_t n;
        std::vector<long> idx;
        if (h.binary) {
          char buf[8];
          if (!in.read(buf, scalar_size(prop.type)))
            throw DataError(path + ": truncated face data at face " + std::to_string(i));
          n = static_cast<size_t>(read_scalar_binary(buf, prop.type));
          for (size_t k = 0; k < n; ++k) {
            if (!in.read(buf, scalar_size(prop.list_item_type)))
              throw DataError(path + ": truncated face data at face " + std::to_string(i));
            idx.push_back(static_cast<long>(read_scalar_binary(buf, prop.list_item_type)));
          }
        } else {
          if (!(in >> n)) throw DataError(path + ": truncated face data at face " + std::to_string(i));
          for (size_t k = 0; k < n; ++k) {
            long v;
            if (!(in >> v))
              throw DataError(path + ": truncated face data at face " + std::to_string(i));
            idx.push_back(v);
          }
        }
        if (n < 3) throw DataError(path + ": face " + std::to_string(i) + " has <3 vertices");
        for (size_t k = 1; k + 1 < n; ++k) {
          for (long v : {idx[0], idx[k], idx[k + 1]})
            if (v < 0 || v >= static_cast<long>(d.positions.size()))
              throw DataError(path + ": face " + std::to_string(i) + " references vertex " +
                              std::to_string(v) + " of " + std::to_string(d.positions.size()));
          d.triangles.push_back({static_cast<int>(idx[0]), static_cast<int>(idx[k]),
                                 static_cast<int>(idx[k + 1])});
        }
      }
    } else {
      // Skip unknown elements (only possible for ASCII line-structured data).
      if (h.binary) throw DataError(path + ": unknown binary element " + elem.name);
      std::string skip;
      for (size_t i = 0; i < elem.count; ++i) std::getline(in, skip);
    }
  }
  return d;
}

void write_ply(const std::string& path, const std::vector<Vec3>& positions,
               const std::vector<Vec3>& normals, const std::vector<Vec2>& uvs,
               const std::vector<std::array<int, 3>>* triangles, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << positions.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (!normals.empty()) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (!uvs.empty()) out << "property float u\nproperty float v\n";
  if (triangles) {
    out << "element face " << triangles->size() << "\n";
    out << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";

  auto put_f = [&](double v) {
    float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
  };
  if (binary) {
    for (size_t i = 0; i < positions.size(); ++i) {
      put_f(positions[i].x);
      put_f(positions[i].y);
      put_f(positions[i].z);
      if (!normals.empty()) {
        put_f(normals[i].x);
        put_f(normals[i].y);
        put_f(normals[i].z);
      }
      if (!uvs.empty()) {
        put_f(uvs[i].x);
        put_f(uvs[i].y);
      }
    }
    if (triangles) {
      for (const auto& t : *triangles) {
        uint8_t n = 3;
        out.write(reinterpret_cast<const char*>(&n), 1);
        for (int k = 0; k < 3; ++k) {
          int32_t v = t[k];
          out.write(reinterpret_cast<const char*>(&v), 4);
        }
      }
    }
  } else {
    char buf[256];
    for (size_t i = 0; i < positions.size(); ++i) {
      snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", positions[i].x, positions[i].y,
               positions[i].z);
      out << buf;
      if (!normals.empty()) {
        snprintf(buf, sizeof(buf), " %.9g %.9g %.9g", normals[i].x, normals[i].y,
                 normals[i].z);
        out << buf;
      }
      if (!uvs.empty()) {
        snprintf(buf, sizeof(buf), " %.9g %.9g", uvs[i].x, uvs[i].y);
        out << buf;
      }
      out << '\n';
    }
    if (triangles)
      for (const auto& t : *triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace

TriMesh load_mesh(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return load_obj(path);
  if (ext == "ply") {
    PlyData d = load_ply_data(path);
    if (d.positions.empty() || d.triangles.empty()) throw DataError(path + ": empty mesh");
    TriMesh mesh;
    mesh.vertices = std::move(d.positions);
    mesh.triangles = std::move(d.triangles);
    if (d.has_normals) mesh.normals = std::move(d.normals);
    if (d.has_uvs) mesh.uvs = std::move(d.uvs);
    validate_mesh(mesh);
    return mesh;
  }
  throw DataError(path + ": unsupported mesh extension ." + ext);
}

void save_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format) {
  validate_mesh(mesh);
  if (format == MeshFormat::Obj) {
    save_obj(mesh, path);
    return;
  }
  write_ply(path, mesh.vertices, mesh.normals, mesh.uvs, &mesh.triangles,
            format == MeshFormat::PlyBinary);
}

OrientedPointSet load_points(const std::string& path) {
  if (lower_ext(path) != "ply") throw DataError(path + ": point clouds must be PLY");
  PlyData d = load_ply_data(path);
  if (d.positions.empty()) throw DataError(path + ": empty point cloud");
  if (!d.has_normals) throw DataError(path + ": point cloud lacks nx/ny/nz normals");
  return {std::move(d.positions), std::move(d.normals)};
}

void save_points(const OrientedPointSet& points, const std::string& path, MeshFormat format) {
  if (points.points.size() != points.normals.size())
    throw DataError("point/normal count mismatch");
  write_ply(path, points.points, points.normals, {}, nullptr,
            format != MeshFormat::PlyAscii);
}

}  // namespace vdmforge
