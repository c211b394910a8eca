#include "gradcheck.hpp"

#include <gtest/gtest.h>

using namespace gcnd;
using namespace gcnd::ad;
using gcnd::support::gradient_error;
using gcnd::support::probe;
using gcnd::support::random_tensor;

TEST(Autodiff, LayerGradientsMatchFiniteDifferences) {
  for (const auto& suite : gcnd::support::gradient_suites()) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      EXPECT_LT(suite.run(seed), 1e-4) << suite.name << " seed " << seed;
    }
  }
}

TEST(Autodiff, RemainingOpGradients) {
  Rng r(3);
  auto a = random_tensor({4, 3}, r), b = random_tensor({4, 3}, r);
  EXPECT_LT(gradient_error({a, b}, [&] { return probe(sub(mul(a, b), add(a, b)), 1); }), 1e-6);
  auto idx = std::make_shared<std::vector<int>>(std::vector<int>{3, 0, 0, 2});
  EXPECT_LT(gradient_error({a}, [&] { return probe(gather_rows(a, idx), 2); }), 1e-6);
  auto src = std::make_shared<std::vector<int>>(std::vector<int>{0, 0, 1, 2, 3, 3});
  auto dst = std::make_shared<std::vector<int>>(std::vector<int>{0, 1, 2, 2, 0, 3});
  EXPECT_LT(gradient_error({a, b}, [&] { return probe(pair_combine(a, b, src, dst), 3); }), 1e-6);
  EXPECT_LT(gradient_error({a, b}, [&] { return probe(concat_cols({a, b, a}), 4); }), 1e-6);
  auto g = random_tensor({3}, r), beta = random_tensor({3}, r);
  const BatchNormStats stats{{0.1, -0.2, 0.3}, {1.5, 0.5, 2.0}};
  EXPECT_LT(gradient_error({a, g, beta}, [&] { return probe(batch_norm_eval(a, g, beta, stats, 1e-5), 5); }), 1e-6);
}

TEST(Autodiff, ForwardValues) {
  const Tensor x({2, 2}, {1, 2, 3, 4});
  const Tensor w({3, 2}, {1, 0, 0, 1, 1, 1});
  const Tensor y = matmul_nt(x, w);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{1, 2, 3, 3, 4, 7}));
  const Tensor z = leaky_relu(Tensor({3}, {-2, 0, 3}), 0.01);
  EXPECT_EQ(z.at(0, 0), -0.02);
  EXPECT_EQ(z.at(2, 0), 3.0);
  EXPECT_EQ(mse(Tensor({2}, {1, 3}), std::vector<double>{0, 1}).item(), 2.5);
}

TEST(Autodiff, SegmentMaxTiesAndEmptySegments) {
  Tensor x({4, 1}, {5, 5, -1, 2}, true);
  auto seg = std::make_shared<std::vector<int>>(std::vector<int>{0, 0, -1, 2});
  const Tensor m = segment_max(x, seg, 3);
  EXPECT_EQ(m.at(0, 0), 5.0);
  EXPECT_EQ(m.at(1, 0), 0.0);  // empty segment
  EXPECT_EQ(m.at(2, 0), 2.0);
  sum(m).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 0, 0, 1}));
  const Tensor mean = segment_mean(x.detach(), seg, 3);
  EXPECT_EQ(mean.at(0, 0), 5.0);
  EXPECT_EQ(mean.at(1, 0), 0.0);
}

TEST(Autodiff, BatchNormStatistics) {
  Tensor x({4, 1}, {1, 2, 3, 6});
  Tensor g({1}, {1.0}), b({1}, {0.0});
  BatchNormStats running{{0.0}, {1.0}};
  const Tensor y = batch_norm_train(x, g, b, 0.0, &running, 0.1);
  // mean 3, biased variance 3.5, unbiased 14/3
  EXPECT_NEAR(y.at(0, 0), -2.0 / std::sqrt(3.5), 1e-12);
  EXPECT_NEAR(running.mean[0], 0.3, 1e-15);
  EXPECT_NEAR(running.var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-15);
}

TEST(Autodiff, SharedSubgraphAccumulates) {
  Tensor x({1}, {3.0}, true);
  const Tensor y = mul(x, x);
  sum(add(y, mul(y, x))).backward();  // x^2 + x^3
  EXPECT_NEAR(x.grad()[0], 2 * 3.0 + 3 * 9.0, 1e-12);
}

TEST(Autodiff, NoHistoryWithoutGrad) {
  const Tensor a({2}, {1, 2});
  const Tensor b = add(a, a);
  EXPECT_FALSE(b.requires_grad());
  EXPECT_TRUE(b.node()->parents.empty());
  Tensor c({2}, {1, 2}, true);
  const Tensor d = add(c, c).detach();
  EXPECT_FALSE(d.requires_grad());
}

TEST(Autodiff, ShapeChecks) {
  const Tensor a({2, 3}, std::vector<double>(6, 1.0));
  const Tensor b({3, 2}, std::vector<double>(6, 1.0));
  EXPECT_THROW(matmul_nt(a, b), std::invalid_argument);
  EXPECT_THROW(add(a, b), std::invalid_argument);
  EXPECT_THROW(Tensor({2, 2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(sum(a).backward(), std::logic_error);  // nothing requires grad
  EXPECT_THROW(Tensor({2}, {1, 2}, true).backward(), std::logic_error);  // not a scalar
}
