#pragma once

// Central finite-difference gradient checks shared by the unit and
// acceptance tests.

#include "gcnd/autodiff.hpp"
#include "gcnd/gcn.hpp"
#include "gcnd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace gcnd::support {

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, bool requires_grad = true, double scale = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return ad::Tensor(std::move(shape), std::move(v), requires_grad);
}

/// Scalar probe: sum(x * weights) with fixed random weights, so every output
/// entry contributes a distinct amount.
inline ad::Tensor probe(const ad::Tensor& x, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(x, random_tensor(x.shape(), rng, false)));
}

// Gradients below this norm count as zero: a parameter the loss does not depend
// on (a bias followed by batch normalization) has an exactly zero gradient, and
// its numeric estimate is pure rounding noise.
inline constexpr double kGradientFloor = 1e-6;

/// Largest per-tensor error ||analytic - numeric|| / max(||analytic||, ||numeric||, floor),
/// with a fourth-order central difference for the numeric side.
inline double gradient_error(std::vector<ad::Tensor> inputs, const std::function<ad::Tensor()>& loss,
                             double h = 1e-4) {
  for (auto& t : inputs) t.zero_grad();
  loss().backward();
  double worst = 0.0;
  for (auto& t : inputs) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    std::vector<double> numeric(t.size());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = data[i];
      const auto at = [&](double offset) {
        data[i] = keep + offset;
        return loss().item();
      };
      const double up1 = at(h), down1 = at(-h), up2 = at(2.0 * h), down2 = at(-2.0 * h);
      data[i] = keep;
      numeric[i] = (8.0 * (up1 - down1) - (up2 - down2)) / (12.0 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn), kGradientFloor});
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

inline EdgeConvLayer random_edge_layer(std::size_t in, std::size_t out, Rng& rng) {
  EdgeConvLayer l;
  l.weight_self = random_tensor({out, in}, rng, true, 0.5);
  l.weight_diff = random_tensor({out, in}, rng, true, 0.5);
  l.bias = random_tensor({out}, rng, true, 0.5);
  l.norm.gamma = random_tensor({out}, rng, true, 0.5);
  for (double& g : l.norm.gamma.mutable_data()) g += 1.0;
  l.norm.beta = random_tensor({out}, rng, true, 0.5);
  l.norm.running = {std::vector<double>(out, 0.0), std::vector<double>(out, 1.0)};
  return l;
}

/// Random pair list over `nodes` rows: every row has its self-pair plus a few random neighbors.
inline PairList random_pairs(std::size_t nodes, Rng& rng) {
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  for (std::size_t i = 0; i < nodes; ++i) {
    src->push_back(static_cast<int>(i));
    dst->push_back(static_cast<int>(i));
    const auto extra = rng.below(4);
    for (std::uint64_t e = 0; e < extra; ++e) {
      src->push_back(static_cast<int>(i));
      dst->push_back(static_cast<int>(rng.below(nodes)));
    }
  }
  return {src, dst};
}

inline std::vector<ad::Tensor> layer_tensors(const EdgeConvLayer& l) {
  return {l.weight_self, l.weight_diff, l.bias, l.norm.gamma, l.norm.beta};
}

struct GradientSuite {
  const char* name;
  std::function<double(std::uint64_t)> run;  // worst relative error for one random instance
};

/// One entry per differentiable layer type.
inline std::vector<GradientSuite> gradient_suites() {
  using namespace ad;
  return {
      {"linear",
       [](std::uint64_t seed) {
         Rng r(seed);
         auto x = random_tensor({5, 4}, r), w = random_tensor({3, 4}, r), b = random_tensor({3}, r);
         return gradient_error({x, w, b}, [&] { return probe(add_bias(matmul_nt(x, w), b), seed); });
       }},
      {"batch_norm",
       [](std::uint64_t seed) {
         Rng r(seed);
         auto x = random_tensor({6, 3}, r), g = random_tensor({3}, r), b = random_tensor({3}, r);
         return gradient_error({x, g, b}, [&] { return probe(batch_norm_train(x, g, b, 1e-5), seed); });
       }},
      {"leaky_relu",
       [](std::uint64_t seed) {
         Rng r(seed);
         auto x = random_tensor({5, 4}, r);
         return gradient_error({x}, [&] { return probe(leaky_relu(x, 0.01), seed); });
       }},
      {"static_edge_conv",
       [](std::uint64_t seed) {
         Rng r(seed);
         auto x = random_tensor({7, 3}, r);
         const auto layer = random_edge_layer(3, 4, r);
         const auto pairs = random_pairs(7, r);
         auto inputs = layer_tensors(layer);
         inputs.push_back(x);
         return gradient_error(inputs, [&] { return probe(edge_conv(x, pairs, layer, true, nullptr), seed); });
       }},
      {"dynamic_edge_conv",
       [](std::uint64_t seed) {
         Rng r(seed);
         const int per_graph = 6;
         auto x = random_tensor({2 * per_graph, 3}, r);
         auto node_graph = std::make_shared<std::vector<int>>();
         for (int i = 0; i < 2 * per_graph; ++i) node_graph->push_back(i % per_graph == 5 ? -1 : i / per_graph);
         const auto layer = random_edge_layer(3, 4, r);
         // neighbor indices frozen at the unperturbed features
         const auto pairs = knn_pairs(x.data(), 3, *node_graph, per_graph, 3);
         auto inputs = layer_tensors(layer);
         inputs.push_back(x);
         return gradient_error(inputs, [&] { return probe(edge_conv(x, pairs, layer, true, nullptr), seed); });
       }},
      {"masked_pooling",
       [](std::uint64_t seed) {
         Rng r(seed);
         auto x = random_tensor({9, 3}, r);
         auto seg = std::make_shared<std::vector<int>>(std::vector<int>{0, 0, -1, 1, 1, 1, -1, 2, 2});
         return gradient_error({x}, [&] {
           return add(probe(segment_mean(x, seg, 3), seed), probe(segment_max(x, seg, 3), seed + 1));
         });
       }},
      {"mse",
       [](std::uint64_t seed) {
         Rng r(seed);
         auto x = random_tensor({4, 3}, r);
         std::vector<double> target(12);
         for (double& t : target) t = r.uniform();
         return gradient_error({x}, [&] { return mse(x, target); });
       }},
  };
}

}  // namespace gcnd::support
