#pragma once

#include "gcnd/mesh.hpp"

#include <span>
#include <unordered_map>
#include <vector>

namespace gcnd {

// Uniform hash grid over a fixed point set.
class SpatialGrid {
 public:
  SpatialGrid(std::span<const Vec3> points, double cell_size);

  /// Indices of points with ||p - center|| < radius, in ascending order.
  std::vector<int> within(const Vec3& center, double radius) const;

  /// Distance from `query` to the closest point; ties irrelevant.
  double nearest_distance(const Vec3& query) const;

  double cell_size() const { return cell_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::array<long long, 3>& k) const {
      return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::array<long long, 3> key_of(const Vec3& p) const;

  std::vector<Vec3> points_;
  double cell_;
  Vec3 lo_ = Vec3::Zero();
  Vec3 hi_ = Vec3::Zero();
  std::unordered_map<std::array<long long, 3>, std::vector<int>, KeyHash> cells_;
};

}  // namespace gcnd
