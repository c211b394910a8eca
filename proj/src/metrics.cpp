#include "gcnd/metrics.hpp"

#include "gcnd/rng.hpp"
#include "gcnd/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gcnd {

namespace {

// Same angle as acos of the clamped dot product of unit vectors, but exact for
// identical vectors where acos loses half the digits.
double degrees_between(const Vec3& a, const Vec3& b) {
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm()) * 180.0 / std::numbers::pi;
}

}  // namespace

AngularError angular_error(std::span<const Vec3> normals, const TriangleMesh& ground_truth) {
  if (normals.size() != ground_truth.face_count()) throw std::invalid_argument("angular_error: face count mismatch");
  AngularError out;
  out.per_face.assign(normals.size(), std::numeric_limits<double>::quiet_NaN());
  out.excluded.assign(normals.size(), 0);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t f = 0; f < normals.size(); ++f) {
    const auto& gt = ground_truth.geometry()[f];
    if (gt.degenerate || normals[f].squaredNorm() == 0.0) {
      out.excluded[f] = 1;
      continue;
    }
    out.per_face[f] = degrees_between(normals[f].normalized(), gt.normal.normalized());
    sum += out.per_face[f];
    ++counted;
  }
  out.mean_degrees = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  return out;
}

AngularError angular_error(const TriangleMesh& denoised, const TriangleMesh& ground_truth) {
  if (denoised.face_count() != ground_truth.face_count() || denoised.faces() != ground_truth.faces()) {
    throw std::invalid_argument("angular_error: meshes do not share connectivity");
  }
  std::vector<Vec3> normals(denoised.face_count());
  for (std::size_t f = 0; f < normals.size(); ++f) {
    normals[f] = denoised.geometry()[f].degenerate ? Vec3::Zero() : denoised.geometry()[f].normal;
  }
  return angular_error(normals, ground_truth);
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  if (mesh.face_count() == 0) throw std::invalid_argument("sample_surface: empty mesh");
  const auto& geo = mesh.geometry();
  std::vector<double> cumulative(geo.size());
  double total = 0.0;
  for (std::size_t f = 0; f < geo.size(); ++f) {
    total += geo[f].area;
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_surface: mesh has zero area");
  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const Face& t = mesh.faces()[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices()[t[0]];
    const Vec3& b = mesh.vertices()[t[1]];
    const Vec3& c = mesh.vertices()[t[2]];
    out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> points) {
  if (points.empty()) throw std::invalid_argument("nearest_distances: empty point set");
  Vec3 lo = points.front();
  Vec3 hi = lo;
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // about a handful of points per occupied cell for surface-like sets
  const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
  const double cell = std::max(extent / std::sqrt(static_cast<double>(points.size()) / 4.0), extent * 1e-6);
  const SpatialGrid grid(points, cell);
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = grid.nearest_distance(queries[i]);
  return out;
}

double vertex_distance(const TriangleMesh& denoised, const TriangleMesh& ground_truth, std::size_t samples,
                       std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("vertex_distance: samples must be >= 1");
  if (denoised.face_count() == 0 || ground_truth.face_count() == 0) {
    throw std::invalid_argument("vertex_distance: empty mesh");
  }
  double area_d = 0.0;
  double area_g = 0.0;
  for (const auto& g : denoised.geometry()) area_d += g.area;
  for (const auto& g : ground_truth.geometry()) area_g += g.area;
  const auto gt_samples = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(samples) * (area_d > 0.0 ? area_g / area_d : 1.0))));
  const auto queries = sample_surface(denoised, samples, seed);
  const auto targets = sample_surface(ground_truth, gt_samples, seed);
  const auto dist = nearest_distances(queries, targets);
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / static_cast<double>(dist.size()) / bounding_box_diagonal(ground_truth);
}

EvalReport evaluate(const TriangleMesh& denoised, const TriangleMesh& ground_truth, std::size_t samples,
                    std::uint64_t seed) {
  EvalReport r;
  auto ea = angular_error(denoised, ground_truth);
  r.angular_error = ea.mean_degrees;
  r.per_face = std::move(ea.per_face);
  r.excluded = std::move(ea.excluded);
  r.samples = samples > 0 ? samples : 10 * denoised.face_count();
  r.vertex_distance = vertex_distance(denoised, ground_truth, r.samples, seed);
  return r;
}

}  // namespace gcnd
