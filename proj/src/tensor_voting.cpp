#include "gcnd/tensor_voting.hpp"

#include "gcnd/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gcnd {

VotingTensor voting_tensor(std::span<const PatchFace> faces, const Vec3& center, double sigma) {
  if (faces.empty()) throw std::invalid_argument("voting_tensor: empty patch");
  if (!(sigma > 0.0)) throw std::invalid_argument("voting_tensor: sigma must be positive");
  double max_area = 0.0;
  for (const PatchFace& f : faces) max_area = std::max(max_area, f.area);
  if (!(max_area > 0.0)) throw std::invalid_argument("voting_tensor: patch has no positive-area face");

  VotingTensor t = VotingTensor::Zero();
  for (const PatchFace& f : faces) {
    const Vec3 offset = f.centroid - center;
    const double weight = (f.area / max_area) * std::exp(-offset.norm() / sigma);
    Vec3 voted = f.normal;
    const Vec3 axis = offset.cross(f.normal).cross(offset);
    const double len = axis.norm();
    if (len >= 1e-12) {
      const Vec3 w = axis / len;
      voted = 2.0 * f.normal.dot(w) * w - f.normal;
    }
    t.noalias() += weight * voted * voted.transpose();
  }
  return 0.5 * (t + t.transpose());
}

SpectralBasis spectral_decompose(const VotingTensor& tensor, const Vec3& reference, const Vec3& moment_hint) {
  const Eigen::SelfAdjointEigenSolver<Mat3> solver(tensor);
  SpectralBasis basis;
  // solver output is ascending
  for (int k = 0; k < 3; ++k) {
    basis.values[k] = solver.eigenvalues()[2 - k];
    basis.vectors.col(k) = solver.eigenvectors().col(2 - k).normalized();
  }

  Vec3 e1 = basis.vectors.col(0);
  Vec3 e2 = basis.vectors.col(1);
  if (e1.dot(reference) < 0.0) e1 = -e1;

  const double projection = e2.dot(moment_hint);
  if (std::abs(projection) > 1e-12) {
    if (projection < 0.0) e2 = -e2;
  } else {
    int largest = 0;
    for (int c = 1; c < 3; ++c) {
      if (std::abs(e2[c]) > std::abs(e2[largest]) + 1e-12) largest = c;
    }
    if (e2[largest] < 0.0) e2 = -e2;
  }
  // re-orthogonalize against rounding before completing the frame
  e2 = (e2 - e2.dot(e1) * e1).normalized();
  basis.vectors.col(0) = e1;
  basis.vectors.col(1) = e2;
  basis.vectors.col(2) = e1.cross(e2);
  return basis;
}

Mat3 alignment_rotation(const SpectralBasis& basis) { return basis.vectors; }

FacetClass classify_facet(const Vec3& v) {
  constexpr double tol = 1e-12;
  if (!(v[0] + tol >= v[1] && v[1] + tol >= v[2]) || v[1] > 1.0 + tol || v[2] < -1e-10) {
    throw std::invalid_argument("classify_facet: eigenvalues must satisfy 1 >= l2 >= l3 >= 0");
  }
  const double l2 = v[1];
  const double l3 = v[2];
  if (l2 < 0.01 && l3 < 0.001) return FacetClass::Flat;
  if (l2 > 0.01 && l3 < 0.1) return FacetClass::Edge;
  if (l3 > 0.1) return FacetClass::Corner;
  return FacetClass::Transitional;
}

FacetGroup group_of(FacetClass c) {
  return (c == FacetClass::Edge || c == FacetClass::Corner) ? FacetGroup::Feature : FacetGroup::NonFeature;
}

std::string_view to_string(FacetClass c) {
  switch (c) {
    case FacetClass::Flat: return "flat";
    case FacetClass::Edge: return "edge";
    case FacetClass::Corner: return "corner";
    case FacetClass::Transitional: return "transitional";
  }
  return "unknown";
}

std::vector<int> balance_samples(std::span<const std::pair<int, FacetClass>> classified, double ratio,
                                 std::uint64_t seed, double empty_fraction) {
  if (!(ratio > 0.0)) throw std::invalid_argument("balance_samples: ratio must be positive");
  std::vector<int> feature;
  std::vector<int> other;
  for (const auto& [face, cls] : classified) {
    (group_of(cls) == FacetGroup::Feature ? feature : other).push_back(face);
  }
  std::size_t keep = 0;
  if (feature.empty()) {
    keep = static_cast<std::size_t>(std::ceil(empty_fraction * static_cast<double>(other.size())));
  } else {
    keep = static_cast<std::size_t>(std::llround(static_cast<double>(feature.size()) / ratio));
  }
  keep = std::min(keep, other.size());

  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(other.size() - i);
    std::swap(other[i], other[j]);
  }
  std::vector<int> out = std::move(feature);
  out.insert(out.end(), other.begin(), other.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gcnd
