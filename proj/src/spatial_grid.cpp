#include "gcnd/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gcnd {

SpatialGrid::SpatialGrid(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()), cell_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("SpatialGrid: cell size must be positive");
  if (!points_.empty()) {
    lo_ = hi_ = points_.front();
    for (const Vec3& p : points_) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) cells_[key_of(points_[i])].push_back(static_cast<int>(i));
}

std::array<long long, 3> SpatialGrid::key_of(const Vec3& p) const {
  return {static_cast<long long>(std::floor(p.x() / cell_)), static_cast<long long>(std::floor(p.y() / cell_)),
          static_cast<long long>(std::floor(p.z() / cell_))};
}

std::vector<int> SpatialGrid::within(const Vec3& center, double radius) const {
  std::vector<int> out;
  if (points_.empty()) return out;
  const Vec3 qlo = (center - Vec3::Constant(radius)).cwiseMax(lo_);
  const Vec3 qhi = (center + Vec3::Constant(radius)).cwiseMin(hi_);
  if ((qlo.array() > qhi.array()).any()) return out;
  const auto a = key_of(qlo);
  const auto b = key_of(qhi);
  const double r2 = radius * radius;
  for (long long x = a[0]; x <= b[0]; ++x)
    for (long long y = a[1]; y <= b[1]; ++y)
      for (long long z = a[2]; z <= b[2]; ++z) {
        const auto it = cells_.find({x, y, z});
        if (it == cells_.end()) continue;
        for (int i : it->second) {
          if ((points_[i] - center).squaredNorm() < r2) out.push_back(i);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

double SpatialGrid::nearest_distance(const Vec3& query) const {
  if (points_.empty()) throw std::logic_error("SpatialGrid: empty point set");
  // expand shells of cells until the best candidate is provably nearest
  const auto center = key_of(query);
  const auto lo = key_of(lo_);
  const auto hi = key_of(hi_);
  long long max_shell = 0;
  for (int c = 0; c < 3; ++c) max_shell = std::max({max_shell, std::llabs(center[c] - lo[c]), std::llabs(hi[c] - center[c])});
  double best2 = std::numeric_limits<double>::infinity();
  for (long long shell = 0; shell <= max_shell; ++shell) {
    for (long long x = center[0] - shell; x <= center[0] + shell; ++x)
      for (long long y = center[1] - shell; y <= center[1] + shell; ++y)
        for (long long z = center[2] - shell; z <= center[2] + shell; ++z) {
          if (std::max({std::llabs(x - center[0]), std::llabs(y - center[1]), std::llabs(z - center[2])}) != shell) {
            continue;
          }
          const auto it = cells_.find({x, y, z});
          if (it == cells_.end()) continue;
          for (int i : it->second) best2 = std::min(best2, (points_[i] - query).squaredNorm());
        }
    // any point outside shell `s` is at least s * cell away from the query
    const double reach = static_cast<double>(shell) * cell_;
    if (best2 <= reach * reach) break;
  }
  return std::sqrt(best2);
}

}  // namespace gcnd
