#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace gcnd;

namespace {

// exhaustive second implementation of the angular error
double loop_angular_error(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i].x() * b[i].x() + a[i].y() * b[i].y() + a[i].z() * b[i].z();
    d = d > 1.0 ? 1.0 : (d < -1.0 ? -1.0 : d);
    sum += std::acos(d) * 180.0 / std::numbers::pi;
  }
  return sum / static_cast<double>(a.size());
}

double brute_nearest(const Vec3& q, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : pts) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace

TEST(AngularError, IdenticalMeshesAreZero) {
  const auto m = primitives::torus(1.0, 0.3, 16, 8);
  const auto r = angular_error(m, m);
  EXPECT_EQ(r.mean_degrees, 0.0);
  for (double e : r.per_face) EXPECT_EQ(e, 0.0);
}

TEST(AngularError, RightAngle) {
  const TriangleMesh a({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {Face{0, 1, 2}});
  const TriangleMesh b({{0, 0, 0}, {1, 0, 0}, {0, 0, 1}}, {Face{0, 1, 2}});
  EXPECT_NEAR(angular_error(a, b).mean_degrees, 90.0, 1e-12);
}

TEST(AngularError, MatchesLoopOracleOnRandomFields) {
  const auto m = primitives::icosphere(1.0, 3);
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec3> field, truth;
    for (const auto& g : m.geometry()) {
      field.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
      truth.push_back(g.normal);
    }
    EXPECT_NEAR(angular_error(field, m).mean_degrees, loop_angular_error(field, truth), 1e-9);
  }
}

TEST(AngularError, SymmetricAndRotationInvariant) {
  const auto clean = primitives::torus(1.0, 0.3, 20, 10);
  const auto noisy = add_noise(clean, {NoiseKind::Gaussian, 0.3, 2});
  const double ab = angular_error(noisy, clean).mean_degrees;
  EXPECT_NEAR(ab, angular_error(clean, noisy).mean_degrees, 1e-12);
  Rng rng(3);
  const Mat3 q = support::random_rotation(rng);
  EXPECT_NEAR(angular_error(transformed(noisy, q), transformed(clean, q)).mean_degrees, ab, 1e-9);
}

TEST(AngularError, ExcludesZeroAreaFaces) {
  const TriangleMesh a({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}}, {Face{0, 1, 2}, Face{0, 3, 1}});
  const TriangleMesh b({{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {1, 0, 1}}, {Face{0, 1, 2}, Face{0, 3, 1}});
  const auto r = angular_error(a, b);
  EXPECT_TRUE(r.excluded[1]);
  EXPECT_FALSE(r.excluded[0]);
  EXPECT_NEAR(r.mean_degrees, 90.0, 1e-12);
  EXPECT_TRUE(std::isnan(r.per_face[1]));
}

TEST(AngularError, RequiresSameConnectivity) {
  const auto a = primitives::icosphere(1.0, 1);
  const auto b = primitives::icosphere(1.0, 2);
  EXPECT_THROW(angular_error(a, b), std::invalid_argument);
}

TEST(SampleSurface, UniformOverArea) {
  // two triangles with areas 1 and 3
  const TriangleMesh m({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {10, 0, 0}, {13, 0, 0}, {10, 2, 0}},
                       {Face{0, 1, 2}, Face{3, 4, 5}});
  const auto pts = sample_surface(m, 40000, 1);
  double right = 0.0;
  for (const Vec3& p : pts) right += p.x() >= 10.0;
  EXPECT_NEAR(right / 40000.0, 0.75, 0.01);
  EXPECT_EQ(sample_surface(m, 100, 5), sample_surface(m, 100, 5));
}

TEST(NearestDistances, MatchesExhaustiveScan) {
  const auto m = add_noise(primitives::icosphere(1.0, 2), {NoiseKind::Gaussian, 0.3, 1});
  const auto pts = sample_surface(m, 2000, 2);
  const auto queries = sample_surface(primitives::torus(0.8, 0.3, 12, 6), 300, 3);
  const auto d = nearest_distances(queries, pts);
  for (std::size_t i = 0; i < queries.size(); ++i) EXPECT_NEAR(d[i], brute_nearest(queries[i], pts), 1e-12);
}

TEST(VertexDistance, SelfDistanceIsAtNoiseFloor) {
  const auto m = primitives::torus(1.0, 0.3, 24, 12);
  EXPECT_LT(vertex_distance(m, m, 20000, 4), 1e-3);
  EXPECT_EQ(vertex_distance(m, m, 500, 4), vertex_distance(m, m, 500, 4));
  EXPECT_THROW(vertex_distance(m, m, 0, 4), std::invalid_argument);
}

TEST(VertexDistance, PlaneOffsetLimit) {
  const auto plane = primitives::grid(10, 10);
  const double h = 0.05;
  std::vector<Vec3> v = plane.vertices();
  for (Vec3& p : v) p.z() += h;
  const auto lifted = plane.with_vertices(v);
  const double expect = h / bounding_box_diagonal(plane);
  EXPECT_NEAR(vertex_distance(lifted, plane, 100000, 5) / expect, 1.0, 0.05);
}

TEST(VertexDistance, ScaleAndRigidInvariance) {
  const auto clean = primitives::icosphere(1.0, 3);
  const auto noisy = add_noise(clean, {NoiseKind::Gaussian, 0.3, 6});
  const double base = vertex_distance(noisy, clean, 20000, 7);
  const double scaled =
      vertex_distance(transformed(noisy, 10.0 * Mat3::Identity()), transformed(clean, 10.0 * Mat3::Identity()), 20000, 7);
  EXPECT_NEAR(scaled, base, 1e-6 * base);
  EXPECT_GT(base, 0.0);

  // axis permutations with sign flips keep the bounding box, so E_v is unchanged
  Mat3 perm;
  perm << 0, -1, 0, 0, 0, 1, -1, 0, 0;
  const double permuted = vertex_distance(transformed(noisy, perm, Vec3(1, 2, 3)), transformed(clean, perm, Vec3(1, 2, 3)), 20000, 7);
  EXPECT_NEAR(permuted, base, 1e-9 * base);

  // a general rotation changes the axis-aligned diagonal; the unnormalized mean distance is invariant
  Rng rng(8);
  const Mat3 q = support::random_rotation(rng);
  const auto moved_gt = transformed(clean, q, Vec3(1, 2, 3));
  const double moved = vertex_distance(transformed(noisy, q, Vec3(1, 2, 3)), moved_gt, 20000, 7);
  EXPECT_NEAR(moved * bounding_box_diagonal(moved_gt), base * bounding_box_diagonal(clean), 1e-9 * base);
}

TEST(Evaluate, ReportFields) {
  const auto clean = primitives::icosphere(1.0, 2);
  const auto noisy = add_noise(clean, {NoiseKind::Gaussian, 0.2, 9});
  const auto r = evaluate(noisy, clean);
  EXPECT_EQ(r.samples, 10 * clean.face_count());
  EXPECT_EQ(r.per_face.size(), clean.face_count());
  EXPECT_GT(r.angular_error, 0.0);
  EXPECT_GT(r.vertex_distance, 0.0);
  double sum = 0.0;
  for (double e : r.per_face) sum += e;
  EXPECT_NEAR(r.angular_error, sum / static_cast<double>(r.per_face.size()), 1e-12);
}
