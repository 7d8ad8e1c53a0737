#pragma once

#include <string>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

enum class MeshFormat { Obj, PlyAscii, PlyBinary };

// Format is chosen by extension (.obj / .ply); PLY flavor is detected from
// the header. Throws DataError with a line/offset description on parse
// failure, out-of-range indices, or an empty mesh.
TriMesh load_mesh(const std::string& path);

// Binary PLY stores positions as float32 little-endian and is the lossless
// interchange format for float32-representable coordinates. ASCII formats
// round-trip to 1e-6.
void save_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format);

// Oriented point clouds as vertex-only PLY with nx/ny/nz.
OrientedPointSet load_points(const std::string& path);
void save_points(const OrientedPointSet& points, const std::string& path,
                 MeshFormat format = MeshFormat::PlyBinary);

}  // namespace vdmforge
