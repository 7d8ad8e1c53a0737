#pragma once

#include <cstdint>

#include "vdmforge/mesh.hpp"

namespace vdmforge {

// Area-weighted uniform surface sampling. Point i consumes draws 3i..3i+2 of
// a splitmix64 stream keyed by `seed`: one for triangle selection against the
// cumulative-area table, two for the square-root barycentric warp. Normals
// are the face normals of the host triangles. Triangles with area < 1e-12
// are skipped (their selection weight is zero); `skipped_triangles` reports
// how many. Deterministic and thread-count independent.
OrientedPointSet sample_surface(const TriMesh& mesh, int n, uint64_t seed,
                                int* skipped_triangles = nullptr);

}  // namespace vdmforge
