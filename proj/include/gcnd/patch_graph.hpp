#pragma once

#include "gcnd/mesh.hpp"
#include "gcnd/spatial_grid.hpp"
#include "gcnd/tensor_voting.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace gcnd {

// Node attribute layout: aligned centroid (3), aligned normal (3), scaled area, 1-ring count.
inline constexpr int kNodeFeatures = 8;

struct PatchGraph {
  int node_count = 0;
  std::vector<double> attrs;               // node_count x kNodeFeatures, row-major
  std::vector<std::array<int, 2>> edges;   // undirected, a < b, no self-loops
  int center = 0;
  Mat3 rotation = Mat3::Identity();        // alignment frame; data was multiplied by its transpose
  double scale = 1.0;                      // normalization factor applied to centroids
  std::vector<int> face_ids;               // original faces, -1 for padding
  Vec3 eigenvalues = Vec3::Zero();         // voting tensor spectrum (raw)

  bool is_valid(int node) const { return face_ids[node] >= 0; }
  int valid_count() const;
  std::span<const double> row(int node) const {
    return {attrs.data() + static_cast<std::size_t>(node) * kNodeFeatures, kNodeFeatures};
  }
};

/// Translates so faces[center] sits at the origin and scales the centroid
/// bounding box to unit longest side. Returns the applied scale (1 for zero extent).
std::pair<std::vector<PatchFace>, double> normalize_patch(std::span<const PatchFace> faces, std::size_t center = 0);

/// Multiplies centroids and normals by rotation^T. Throws on a non-orthonormal matrix.
std::vector<PatchFace> align_patch(std::span<const PatchFace> faces, const Mat3& rotation);

// Per-mesh patch extraction state (2-ring areas, vertex grid). The mesh must outlive it.
class PatchBuilder {
 public:
  explicit PatchBuilder(const TriangleMesh& mesh);

  const TriangleMesh& mesh() const { return *mesh_; }

  double radius(int face, double k) const;

  /// Faces with a vertex strictly inside the sphere of radius(face, k) around the
  /// face centroid; the face itself is always included. Ascending ids.
  std::vector<int> select(int face, double k) const;

  /// Voting-tensor frame of the selected patch (sigma = radius / 3).
  SpectralBasis basis(int face, double k) const;

  PatchGraph build(int face, double k, int node_budget, std::uint64_t seed) const;

 private:
  SpectralBasis basis_of(int face, std::span<const int> patch, double radius) const;

  const TriangleMesh* mesh_;
  std::vector<double> two_ring_area_;
  SpatialGrid grid_;
};

std::vector<int> select_patch(const TriangleMesh& mesh, int face, double k);
PatchGraph build_graph(const TriangleMesh& mesh, int face, double k, int node_budget, std::uint64_t seed);

/// Classifies every face from its patch tensor (eigenvalues normalized by the largest).
std::vector<FacetClass> classify_faces(const TriangleMesh& mesh, double k);

// Patch cache: "GCNP", u32 version, u32 N, f64 k, u64 count, then per record
// f64[N*8] attrs, u32 edge count, u32 pairs, u32 center, f64[9] rotation
// (row-major), f64 scale, i32[N] face ids. All little-endian.
struct PatchCache {
  int node_budget = 0;
  double k = 0.0;
  std::vector<PatchGraph> graphs;
};

void write_patch_cache(const std::filesystem::path& path, const PatchCache& cache);
PatchCache read_patch_cache(const std::filesystem::path& path);

}  // namespace gcnd
