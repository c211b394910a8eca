#pragma once

#include "gcnd/mesh.hpp"

namespace gcnd::primitives {

// Closed (or, for the grid, open) triangle meshes with outward winding.
// Used as synthetic clean models and as test fixtures.

/// Planar grid in z = 0 covering [0, width] x [0, height]; all triangles congruent.
TriangleMesh grid(int nx, int ny, double width = 1.0, double height = 1.0);

/// Axis-aligned box centered at the origin with `divisions` cells along each axis.
TriangleMesh box(const Vec3& size, const std::array<int, 3>& divisions);

TriangleMesh icosphere(double radius, int subdivisions);

/// Capped cylinder along z, centered at the origin.
TriangleMesh cylinder(double radius, double height, int segments, int rings, int cap_rings);

TriangleMesh torus(double major_radius, double minor_radius, int major_segments, int minor_segments);

/// Regular octahedron with vertices at +-size on the axes; each face split into n^2 triangles.
TriangleMesh octahedron(double size, int subdivisions);

/// Capped cone along z with apex at +height/2.
TriangleMesh cone(double radius, double height, int segments, int rings, int cap_rings);

}  // namespace gcnd::primitives
