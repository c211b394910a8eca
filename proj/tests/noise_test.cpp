#include "gcnd/noise.hpp"
#include "gcnd/primitives.hpp"
#include "gcnd/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace gcnd;

namespace {

// icosphere(1, 5) has 10242 vertices
const TriangleMesh& big_sphere() {
  static const TriangleMesh m = primitives::icosphere(1.0, 5);
  return m;
}

std::vector<double> displacements(const TriangleMesh& a, const TriangleMesh& b) {
  std::vector<double> d;
  for (std::size_t v = 0; v < a.vertex_count(); ++v)
    for (int c = 0; c < 3; ++c) d.push_back(b.vertices()[v][c] - a.vertices()[v][c]);
  return d;
}

// Kolmogorov-Smirnov statistic against N(0, sigma^2).
double ks_statistic(std::vector<double> x, double sigma) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-x[i] / (sigma * std::sqrt(2.0)));
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  return d;
}

}  // namespace

TEST(Rng, ReproducibleAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const auto k = a.below(7);
    EXPECT_EQ(k, b.below(7));
    EXPECT_LT(k, 7u);
  }
  EXPECT_NE(mix_seed(1, 2), mix_seed(2, 1));
}

TEST(Rng, NormalMoments) {
  Rng r(7);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(GaussianNoise, ZeroLevelIsIdentity) {
  const auto m = primitives::icosphere(1.0, 2);
  const auto out = add_gaussian_noise(m, {NoiseKind::Gaussian, 0.0, 3});
  EXPECT_EQ(out.vertices(), m.vertices());
}

TEST(GaussianNoise, DeterministicPerSeed) {
  const auto m = primitives::icosphere(1.0, 2);
  const auto a = add_noise(m, {NoiseKind::Gaussian, 0.2, 11});
  const auto b = add_noise(m, {NoiseKind::Gaussian, 0.2, 11});
  const auto c = add_noise(m, {NoiseKind::Gaussian, 0.2, 12});
  EXPECT_EQ(a.vertices(), b.vertices());
  EXPECT_NE(a.vertices(), c.vertices());
  EXPECT_TRUE(a.same_connectivity(m));
  EXPECT_EQ(a.faces(), m.faces());
}

TEST(GaussianNoise, StandardDeviationMatchesLevel) {
  const auto& m = big_sphere();
  ASSERT_GE(m.vertex_count(), 10000u);
  const double sigma = 0.3 * mean_edge_length(m);
  const auto d = displacements(m, add_gaussian_noise(m, {NoiseKind::Gaussian, 0.3, 5}));
  double s2 = 0.0;
  for (double x : d) s2 += x * x;
  EXPECT_NEAR(std::sqrt(s2 / static_cast<double>(d.size())) / sigma, 1.0, 0.03);
}

TEST(GaussianNoise, KolmogorovSmirnovAtOnePercent) {
  const auto& m = big_sphere();
  const double sigma = 0.2 * mean_edge_length(m);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = displacements(m, add_gaussian_noise(m, {NoiseKind::Gaussian, 0.2, seed}));
    const double critical = 1.628 / std::sqrt(static_cast<double>(d.size()));
    EXPECT_LT(ks_statistic(d, sigma), critical) << "seed " << seed;
  }
}

TEST(ImpulsiveNoise, MovesExactCount) {
  const auto m = primitives::icosphere(1.0, 3);
  const auto n = m.vertex_count();
  for (double level : {0.1, 0.3, 0.6}) {
    const auto out = add_impulsive_noise(m, {NoiseKind::Impulsive, level, 9});
    std::size_t moved = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (out.vertices()[v] != m.vertices()[v]) ++moved;
    }
    EXPECT_EQ(moved, static_cast<std::size_t>(std::floor(level * static_cast<double>(n) + 1e-9))) << level;
  }
  EXPECT_EQ(add_impulsive_noise(m, {NoiseKind::Impulsive, 0.0, 9}).vertices(), m.vertices());
}

TEST(ImpulsiveNoise, StrengthScalesMagnitude) {
  const auto& m = big_sphere();
  const double sigma = 0.5 * mean_edge_length(m);
  const auto out = add_impulsive_noise(m, {NoiseKind::Impulsive, 0.5, 4});
  double s2 = 0.0;
  std::size_t moved = 0;
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    const double d = (out.vertices()[v] - m.vertices()[v]).norm();
    if (d > 0.0) {
      s2 += d * d;
      ++moved;
    }
  }
  EXPECT_NEAR(std::sqrt(s2 / static_cast<double>(moved)) / sigma, 1.0, 0.05);
}

TEST(NoiseSpec, Validation) {
  const auto m = primitives::icosphere(1.0, 1);
  EXPECT_THROW(validate({NoiseKind::Gaussian, -1.0, 0}), std::invalid_argument);
  EXPECT_THROW(validate({NoiseKind::Impulsive, 1.5, 0}), std::invalid_argument);
  EXPECT_THROW(validate({NoiseKind::Gaussian, std::nan(""), 0}), std::invalid_argument);
  EXPECT_NO_THROW(validate({NoiseKind::Gaussian, 1.5, 0}));
  EXPECT_THROW(add_gaussian_noise(m, {NoiseKind::Impulsive, 0.1, 0}), std::invalid_argument);
  EXPECT_EQ(parse_noise_kind("impulsive"), NoiseKind::Impulsive);
  EXPECT_THROW(parse_noise_kind("salt"), std::invalid_argument);
}
