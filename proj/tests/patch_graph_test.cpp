#include "gcnd/noise.hpp"
#include "gcnd/patch_graph.hpp"
#include "gcnd/primitives.hpp"
#include "gcnd/rng.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace gcnd;

namespace {

using EdgeSet = std::set<std::array<int, 2>>;

TriangleMesh noisy_torus() {
  return add_noise(primitives::torus(1.0, 0.4, 24, 12), {NoiseKind::Gaussian, 0.2, 5});
}

std::vector<int> brute_select(const TriangleMesh& m, int face, double k) {
  const double r = k * std::sqrt(two_ring_avg_area(m, face));
  const Vec3 c = m.geometry()[face].centroid;
  std::vector<int> out;
  for (std::size_t f = 0; f < m.face_count(); ++f) {
    bool inside = static_cast<int>(f) == face;
    for (int v : m.faces()[f]) inside = inside || (m.vertices()[v] - c).norm() < r;
    if (inside) out.push_back(static_cast<int>(f));
  }
  return out;
}

}  // namespace

TEST(PatchSelect, MatchesBruteForce) {
  const auto m = noisy_torus();
  const PatchBuilder builder(m);
  for (int f = 0; f < static_cast<int>(m.face_count()); f += 7) {
    for (double k : {1.0, 2.5, 4.0}) EXPECT_EQ(builder.select(f, k), brute_select(m, f, k)) << f << " " << k;
  }
  EXPECT_EQ(select_patch(m, 3, 4.0), brute_select(m, 3, 4.0));
  EXPECT_THROW(builder.select(-1, 4.0), std::out_of_range);
  EXPECT_THROW(builder.select(0, 0.0), std::invalid_argument);
}

TEST(PatchSelect, TinyScaleStillHoldsCenter) {
  const auto m = primitives::icosphere(1.0, 2);
  EXPECT_EQ(select_patch(m, 10, 1e-6), std::vector<int>{10});
}

TEST(NormalizePatch, CentersAndScales) {
  std::vector<PatchFace> faces{{Vec3::UnitZ(), Vec3(1, 1, 1), 2.0}, {Vec3::UnitZ(), Vec3(3, 1, 1), 4.0},
                               {Vec3::UnitZ(), Vec3(1, 2, 1), 1.0}};
  const auto [out, scale] = normalize_patch(faces, 0);
  EXPECT_DOUBLE_EQ(scale, 0.5);
  EXPECT_EQ(out[0].centroid, Vec3::Zero());
  EXPECT_LT((out[1].centroid - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(out[1].area, 1.0);
  const auto [single, s1] = normalize_patch(std::span(faces).first(1), 0);
  EXPECT_EQ(s1, 1.0);
}

TEST(AlignPatch, RejectsNonRotation) {
  const std::vector<PatchFace> faces{{Vec3::UnitZ(), Vec3(1, 0, 0), 1.0}};
  EXPECT_THROW(align_patch(faces, 2.0 * Mat3::Identity()), std::invalid_argument);
  const Mat3 r = Eigen::AngleAxisd(0.5, Vec3::UnitZ()).toRotationMatrix();
  const auto out = align_patch(faces, r);
  EXPECT_LT((out[0].centroid - r.transpose() * Vec3(1, 0, 0)).norm(), 1e-15);
}

TEST(BuildGraph, LayoutAndPadding) {
  const auto m = noisy_torus();
  const PatchBuilder builder(m);
  for (int f : {0, 17, 101}) {
    const auto patch = builder.select(f, 4.0);
    for (int budget : {8, 64, 400}) {
      const PatchGraph g = builder.build(f, 4.0, budget, 1);
      ASSERT_EQ(g.node_count, budget);
      ASSERT_EQ(g.attrs.size(), static_cast<std::size_t>(budget) * kNodeFeatures);
      EXPECT_EQ(g.face_ids[0], f);
      EXPECT_EQ(g.valid_count(), std::min<int>(budget, static_cast<int>(patch.size())));
      for (int i = 0; i < budget; ++i) {
        const auto row = g.row(i);
        if (!g.is_valid(i)) {
          for (double a : row) EXPECT_EQ(a, 0.0);
          continue;
        }
        EXPECT_TRUE(std::binary_search(patch.begin(), patch.end(), g.face_ids[i]));
        EXPECT_NEAR(Vec3(row[3], row[4], row[5]).norm(), 1.0, 1e-12);
        EXPECT_EQ(row[7], m.one_ring_count(g.face_ids[i]));
        EXPECT_NEAR(row[6], m.geometry()[g.face_ids[i]].area * g.scale * g.scale, 1e-15);
      }
      for (int a = 0; a < 3; ++a) EXPECT_EQ(g.row(0)[a], 0.0);
      // centroid bounding box has unit longest side
      Vec3 lo = Vec3::Constant(1e9), hi = -lo;
      for (int i = 0; i < g.valid_count(); ++i) {
        const Vec3 c(g.row(i)[0], g.row(i)[1], g.row(i)[2]);
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
      }
      if (g.valid_count() > 1) {
        EXPECT_NEAR((hi - lo).maxCoeff(), 1.0, 1e-12);
      }
      // edges: exactly the shared-edge pairs among kept faces
      EdgeSet expect;
      for (int i = 0; i < g.valid_count(); ++i)
        for (int j = i + 1; j < g.valid_count(); ++j) {
          const auto nb = m.edge_neighbors(g.face_ids[i]);
          if (std::find(nb.begin(), nb.end(), g.face_ids[j]) != nb.end()) expect.insert({i, j});
        }
      EXPECT_EQ(EdgeSet(g.edges.begin(), g.edges.end()), expect);
      // aligned center normal lies close to the first axis
      EXPECT_GT(g.row(0)[3], 0.0);
    }
  }
}

TEST(BuildGraph, KeepsNearestFaces) {
  const auto m = noisy_torus();
  const int f = 40;
  const PatchGraph g = build_graph(m, f, 4.0, 16, 3);
  const Vec3 c = m.geometry()[f].centroid;
  double kept_max = 0.0;
  std::set<int> kept(g.face_ids.begin(), g.face_ids.end());
  for (int id : g.face_ids) kept_max = std::max(kept_max, (m.geometry()[id].centroid - c).norm());
  for (int id : select_patch(m, f, 4.0)) {
    if (!kept.count(id)) {
      EXPECT_GE((m.geometry()[id].centroid - c).norm(), kept_max);
    }
  }
}

TEST(BuildGraph, SeededTieBreak) {
  // a regular grid has many equidistant faces
  const auto m = primitives::grid(12, 12, 1.0, 1.0);
  const int f = 140;
  const auto a = build_graph(m, f, 4.0, 20, 1);
  EXPECT_EQ(a.face_ids, build_graph(m, f, 4.0, 20, 1).face_ids);
  bool differs = false;
  for (std::uint64_t s = 2; s < 12 && !differs; ++s) differs = build_graph(m, f, 4.0, 20, s).face_ids != a.face_ids;
  EXPECT_TRUE(differs);
}

TEST(BuildGraph, RigidMotionInvariance) {
  const auto m = noisy_torus();
  Rng r(11);
  const PatchBuilder base(m);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat3 q = Eigen::AngleAxisd(r.uniform() * 6.28, Vec3(r.normal(), r.normal(), r.normal()).normalized())
                       .toRotationMatrix();
    const auto moved = transformed(m, q, Vec3(r.normal(), r.normal(), r.normal()));
    const PatchBuilder other(moved);
    for (int f = 0; f < static_cast<int>(m.face_count()); f += 23) {
      const auto frame = base.basis(f, 4.0);
      const double gap = std::min(frame.values[0] - frame.values[1], frame.values[1] - frame.values[2]);
      if (gap <= 1e-6 * frame.values[0]) continue;
      const auto a = base.build(f, 4.0, 64, 0);
      const auto b = other.build(f, 4.0, 64, 0);
      ASSERT_EQ(a.face_ids, b.face_ids);
      double err = 0.0;
      for (std::size_t i = 0; i < a.attrs.size(); ++i) err = std::max(err, std::abs(a.attrs[i] - b.attrs[i]));
      EXPECT_LT(err, 1e-5) << "face " << f;
      EXPECT_LT((b.rotation - q * a.rotation).norm(), 1e-6);
    }
  }
}

TEST(BuildGraph, ScaleInvariance) {
  const auto m = noisy_torus();
  const auto big = transformed(m, 10.0 * Mat3::Identity());
  const auto a = build_graph(m, 5, 4.0, 64, 0);
  const auto b = build_graph(big, 5, 4.0, 64, 0);
  ASSERT_EQ(a.face_ids, b.face_ids);
  for (std::size_t i = 0; i < a.attrs.size(); ++i) EXPECT_NEAR(a.attrs[i], b.attrs[i], 1e-9);
}

TEST(ClassifyFaces, CubeFeatures) {
  const auto cube = primitives::box({1, 1, 1}, {4, 4, 4});
  const auto classes = classify_faces(cube, 4.0);
  for (std::size_t f = 0; f < cube.face_count(); ++f) {
    const auto& t = cube.faces()[f];
    // faces touching a cube edge have a vertex with two coordinates at +-0.5
    bool on_edge = false;
    for (int v : t) {
      int extreme = 0;
      for (int a = 0; a < 3; ++a) extreme += std::abs(std::abs(cube.vertices()[v][a]) - 0.5) < 1e-12;
      on_edge = on_edge || extreme >= 2;
    }
    if (on_edge) {
      EXPECT_EQ(group_of(classes[f]), FacetGroup::Feature) << f;
    }
  }
  const auto sphere = classify_faces(primitives::icosphere(1.0, 3), 4.0);
  std::size_t smooth = 0;
  for (auto c : sphere) smooth += group_of(c) == FacetGroup::NonFeature;
  EXPECT_GT(static_cast<double>(smooth), 0.9 * static_cast<double>(sphere.size()));
}

TEST(PatchCache, RoundTrip) {
  const auto m = noisy_torus();
  PatchCache cache{64, 4.0, {}};
  for (int f = 0; f < 10; ++f) cache.graphs.push_back(build_graph(m, f, 4.0, 64, 0));
  const auto path = std::filesystem::temp_directory_path() / "gcnd_patch_cache.bin";
  write_patch_cache(path, cache);
  const auto back = read_patch_cache(path);
  ASSERT_EQ(back.graphs.size(), cache.graphs.size());
  EXPECT_EQ(back.node_budget, 64);
  EXPECT_EQ(back.k, 4.0);
  for (std::size_t i = 0; i < back.graphs.size(); ++i) {
    EXPECT_EQ(back.graphs[i].attrs, cache.graphs[i].attrs);
    EXPECT_EQ(back.graphs[i].edges, cache.graphs[i].edges);
    EXPECT_EQ(back.graphs[i].rotation, cache.graphs[i].rotation);
    EXPECT_EQ(back.graphs[i].scale, cache.graphs[i].scale);
    EXPECT_EQ(back.graphs[i].face_ids, cache.graphs[i].face_ids);
  }
}
