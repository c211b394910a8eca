#pragma once

#include "gcnd/mesh.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace gcnd {

struct PatchFace {
  Vec3 normal;
  Vec3 centroid;
  double area = 0.0;
};

using VotingTensor = Mat3;

// Eigen-decomposition of a voting tensor, values descending, columns of
// `vectors` are e1, e2, e3 and form a right-handed frame.
struct SpectralBasis {
  Vec3 values = Vec3::Zero();
  Mat3 vectors = Mat3::Identity();
};

enum class FacetClass { Flat, Edge, Corner, Transitional };
enum class FacetGroup { NonFeature, Feature };

/// Normal voting tensor sum_j mu_j n'_j n'_j^T with mu_j = (a_j / a_max) exp(-|c_j - c| / sigma).
/// Faces at the center (or with a vanishing reflection axis) vote their own normal.
VotingTensor voting_tensor(std::span<const PatchFace> faces, const Vec3& center, double sigma);

/// Sign convention: e1 . reference >= 0; e2 points toward the side of the
/// patch holding more (weighted) first moment, `moment_axis_hint` being that
/// moment vector (pass zero to use the largest-component rule); e3 = e1 x e2.
SpectralBasis spectral_decompose(const VotingTensor& tensor, const Vec3& reference = Vec3::UnitZ(),
                                 const Vec3& moment_hint = Vec3::Zero());

/// R = [e1 | e2 | e3]; patch data is aligned by multiplying with R^T.
Mat3 alignment_rotation(const SpectralBasis& basis);

/// Eigenvalues normalized so the first is 1. Throws std::invalid_argument when unordered.
FacetClass classify_facet(const Vec3& normalized_values);
FacetGroup group_of(FacetClass c);
std::string_view to_string(FacetClass c);

/// All Feature faces plus a seeded uniform subset of NonFeature faces with
/// |Feature| / |NonFeature kept| ~= ratio. With no Feature faces a uniform
/// sample of ceil(empty_fraction * |NonFeature|) faces is returned. Result sorted.
std::vector<int> balance_samples(std::span<const std::pair<int, FacetClass>> classified, double ratio,
                                 std::uint64_t seed, double empty_fraction = 0.1);

}  // namespace gcnd
