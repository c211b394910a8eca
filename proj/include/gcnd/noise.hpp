#pragma once

#include "gcnd/mesh.hpp"

#include <cstdint>
#include <string_view>

namespace gcnd {

enum class NoiseKind { Gaussian, Impulsive };

// Gaussian: `level` is the per-coordinate standard deviation as a fraction of
// the mean edge length. Impulsive: `level` is both the fraction of displaced
// vertices and the displacement strength (fraction of the mean edge length).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double level = 0.0;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when the spec violates its invariants.
void validate(const NoiseSpec& spec);

TriangleMesh add_gaussian_noise(const TriangleMesh& mesh, const NoiseSpec& spec);
TriangleMesh add_impulsive_noise(const TriangleMesh& mesh, const NoiseSpec& spec);

/// Dispatches on spec.kind.
TriangleMesh add_noise(const TriangleMesh& mesh, const NoiseSpec& spec);

NoiseKind parse_noise_kind(std::string_view name);

}  // namespace gcnd
