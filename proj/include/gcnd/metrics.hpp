#pragma once

#include "gcnd/mesh.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gcnd {

struct AngularError {
  double mean_degrees = 0.0;
  std::vector<double> per_face;  // degrees; NaN where excluded
  std::vector<char> excluded;    // zero-area face in either mesh
};

/// Per-face angle between corresponding face normals; faces must correspond by index.
AngularError angular_error(const TriangleMesh& denoised, const TriangleMesh& ground_truth);

/// Same metric against an explicit per-face normal field.
AngularError angular_error(std::span<const Vec3> normals, const TriangleMesh& ground_truth);

/// Area-uniform random points on the surface.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

/// Distance from each query to its nearest point (grid accelerated).
std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> points);

/// Mean nearest-sample distance from `samples` points on the denoised surface
/// to ground-truth samples of equal density, over the ground-truth bbox diagonal.
double vertex_distance(const TriangleMesh& denoised, const TriangleMesh& ground_truth, std::size_t samples,
                       std::uint64_t seed);

struct EvalReport {
  double angular_error = 0.0;    // degrees
  double vertex_distance = 0.0;  // fraction of the bbox diagonal
  std::vector<double> per_face;
  std::vector<char> excluded;
  std::size_t samples = 0;
};

/// samples == 0 picks 10 per denoised face.
EvalReport evaluate(const TriangleMesh& denoised, const TriangleMesh& ground_truth, std::size_t samples = 0,
                    std::uint64_t seed = 0);

}  // namespace gcnd
