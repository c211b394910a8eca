#include "gcnd/noise.hpp"

#include "gcnd/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gcnd {

void validate(const NoiseSpec& spec) {
  if (!(spec.level >= 0.0) || !std::isfinite(spec.level)) {
    throw std::invalid_argument("noise level must be a finite value >= 0");
  }
  if (spec.kind == NoiseKind::Impulsive && spec.level > 1.0) {
    throw std::invalid_argument("impulsive noise fraction must be <= 1");
  }
}

TriangleMesh add_gaussian_noise(const TriangleMesh& mesh, const NoiseSpec& spec) {
  validate(spec);
  if (spec.kind != NoiseKind::Gaussian) throw std::invalid_argument("add_gaussian_noise: spec is not Gaussian");
  if (spec.level == 0.0) return mesh;
  const double sigma = spec.level * mean_edge_length(mesh);
  Rng rng(spec.seed);
  std::vector<Vec3> out = mesh.vertices();
  for (Vec3& v : out) {
    for (int c = 0; c < 3; ++c) v[c] += sigma * rng.normal();
  }
  return mesh.with_vertices(std::move(out));
}

TriangleMesh add_impulsive_noise(const TriangleMesh& mesh, const NoiseSpec& spec) {
  validate(spec);
  if (spec.kind != NoiseKind::Impulsive) throw std::invalid_argument("add_impulsive_noise: spec is not impulsive");
  const std::size_t n = mesh.vertex_count();
  const auto count = static_cast<std::size_t>(std::floor(spec.level * static_cast<double>(n) + 1e-9));
  if (count == 0) return mesh;
  const double sigma = spec.level * mean_edge_length(mesh);
  Rng rng(spec.seed);

  // partial Fisher-Yates: the first `count` entries are a uniform sample
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(order[i], order[j]);
  }

  std::vector<Vec3> out = mesh.vertices();
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 dir;
    do {
      dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (dir.norm() < 1e-12);
    dir.normalize();
    double magnitude = sigma * rng.normal();
    if (magnitude == 0.0) magnitude = sigma;  // keep the moved-count contract exact
    out[order[i]] += magnitude * dir;
  }
  return mesh.with_vertices(std::move(out));
}

TriangleMesh add_noise(const TriangleMesh& mesh, const NoiseSpec& spec) {
  return spec.kind == NoiseKind::Gaussian ? add_gaussian_noise(mesh, spec) : add_impulsive_noise(mesh, spec);
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "gaussian") return NoiseKind::Gaussian;
  if (name == "impulsive") return NoiseKind::Impulsive;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

}  // namespace gcnd
