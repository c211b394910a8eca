#pragma once

// Shared fixtures for the denoising tests.

#include "gcnd/denoise.hpp"
#include "gcnd/metrics.hpp"
#include "gcnd/noise.hpp"
#include "gcnd/primitives.hpp"
#include "gcnd/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace gcnd::support {

/// Returns the mapped aligned normal of each patch center, so regression
/// reproduces the current face normals.
inline NormalPredictor identity_predictor() {
  return [](std::span<const PatchGraph> graphs) {
    std::vector<Vec3> out;
    for (const auto& g : graphs) {
      const auto row = g.row(g.center);
      out.push_back((Vec3(row[3], row[4], row[5]) + Vec3::Ones()) / 2.0);
    }
    return out;
  };
}

/// Noisy plane z = 0 (Gaussian noise applied to z only).
inline TriangleMesh noisy_plane(int n, double level, std::uint64_t seed) {
  const auto plane = primitives::grid(n, n, 1.0, 1.0);
  const double sigma = level * mean_edge_length(plane);
  Rng rng(seed);
  std::vector<Vec3> v = plane.vertices();
  for (Vec3& p : v) p.z() += sigma * rng.normal();
  return plane.with_vertices(std::move(v));
}

inline double max_out_of_plane(const TriangleMesh& m) {
  double d = 0.0;
  for (const Vec3& p : m.vertices()) d = std::max(d, std::abs(p.z()));
  return d;
}

/// Rotates each normal by a random angle ~ N(0, sigma_deg) about a random perpendicular axis.
inline std::vector<Vec3> perturb_normals(const TriangleMesh& m, double sigma_deg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec3> out;
  for (const auto& g : m.geometry()) {
    Vec3 axis = g.normal.cross(Vec3(rng.normal(), rng.normal(), rng.normal())).normalized();
    const double angle = sigma_deg * rng.normal() * 3.141592653589793 / 180.0;
    out.push_back(Eigen::AngleAxisd(angle, axis) * g.normal);
  }
  return out;
}

inline Mat3 random_rotation(Rng& rng) {
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  return Eigen::AngleAxisd(rng.uniform() * 6.283185307179586, axis).toRotationMatrix();
}

}  // namespace gcnd::support
