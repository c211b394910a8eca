#pragma once

#include "gcnd/autodiff.hpp"
#include "gcnd/mesh.hpp"
#include "gcnd/patch_graph.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gcnd {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Layer widths: `channels` lists the output width of each static EdgeConv,
// then each dynamic EdgeConv, then each hidden fully connected layer. A final
// linear head maps the last hidden width to the 3 normal components. The
// pooled vector fed to the first FC layer has width 2 * (sum of conv widths).
struct GcnConfig {
  int static_layers = 3;
  int dynamic_layers = 3;
  int fc_layers = 4;
  std::vector<int> channels{64, 128, 128, 256, 256, 256, 1024, 512, 256, 64};
  int knn = 8;
  int node_budget = 64;
  double patch_scale = 4.0;

  static GcnConfig first_stage();
  static GcnConfig later_stage();
  /// Same architecture with every width divided by `divisor` (at least 1).
  GcnConfig scaled(int divisor) const;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  int conv_width_sum() const;
};

struct BatchNormLayer {
  ad::Tensor gamma;
  ad::Tensor beta;
  ad::BatchNormStats running;
};

// h(F_i, F_j) = W_self F_i + W_diff (F_j - F_i) + b, i.e. one linear map of [F_i ; F_j - F_i].
struct EdgeConvLayer {
  ad::Tensor weight_self;  // [out x in]
  ad::Tensor weight_diff;  // [out x in]
  ad::Tensor bias;         // [out]
  BatchNormLayer norm;
};

struct DenseLayer {
  ad::Tensor weight;  // [out x in]
  ad::Tensor bias;    // [out]
  std::optional<BatchNormLayer> norm;  // absent on the output head
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
};

struct GcnModel {
  GcnConfig config;
  std::vector<EdgeConvLayer> convs;  // static layers first, then dynamic
  std::vector<DenseLayer> dense;     // hidden layers, then the output head
  std::uint64_t step = 0;
  std::vector<AdamMoments> moments;  // parallel to parameters()

  GcnModel() = default;
  GcnModel(GcnConfig config, std::uint64_t seed);

  /// Deep copy (tensor handles are otherwise shared).
  GcnModel clone() const;

  /// Trainable tensors in checkpoint order: per conv (weight_self, weight_diff,
  /// bias, gamma, beta), per dense (weight, bias[, gamma, beta]).
  std::vector<ad::Tensor> parameters() const;
  std::vector<ad::BatchNormStats*> norm_stats();
  std::vector<const ad::BatchNormStats*> norm_stats() const;
  void zero_grad();
};

// A batch of equally sized patch graphs flattened to B*N node rows.
struct GraphBatch {
  int graphs = 0;
  int nodes_per_graph = 0;
  ad::Tensor features;                                 // [B*N x 8]
  std::shared_ptr<const std::vector<int>> node_graph;  // graph id per row, -1 for padding
  std::shared_ptr<const std::vector<int>> pair_src;    // static pairs incl. self-pairs, valid nodes only
  std::shared_ptr<const std::vector<int>> pair_dst;

  std::size_t rows() const { return static_cast<std::size_t>(graphs) * nodes_per_graph; }
};

GraphBatch make_batch(std::span<const PatchGraph* const> graphs);
GraphBatch make_batch(std::span<const PatchGraph> graphs);

/// Pairs (i, i) and (i, j) for the K nearest valid nodes j of i in feature
/// space (squared Euclidean, ties to the lower index), per graph.
struct PairList {
  std::shared_ptr<const std::vector<int>> src;
  std::shared_ptr<const std::vector<int>> dst;
};
PairList knn_pairs(std::span<const double> features, std::size_t cols, const std::vector<int>& node_graph,
                   int nodes_per_graph, int k);

/// max_{j in pairs(i)} LeakyReLU(BN(h(F_i, F_j))); rows without pairs give 0.
ad::Tensor edge_conv(const ad::Tensor& features, const PairList& pairs, const EdgeConvLayer& layer, bool training,
                     ad::BatchNormStats* update_running);

/// Dynamic variant: neighbors from knn_pairs on the current feature values.
ad::Tensor dynamic_edge_conv(const ad::Tensor& features, const GraphBatch& batch, int k, const EdgeConvLayer& layer,
                             bool training, ad::BatchNormStats* update_running);

/// Raw [B x 3] network output in (0,1)-mapped normal space. Training mode uses
/// batch statistics and updates running statistics.
ad::Tensor gcn_forward(GcnModel& model, const GraphBatch& batch, bool training);
ad::Tensor gcn_forward(const GcnModel& model, const GraphBatch& batch);

/// Mapped target (R^T n + 1) / 2 for a ground-truth normal.
Vec3 mapped_target(const Vec3& normal, const Mat3& rotation);

/// MSE between predictions [B x 3] and mapped targets. Throws on non-unit targets.
ad::Tensor loss_mse(const ad::Tensor& prediction, std::span<const Vec3> targets, std::span<const Mat3> rotations);

struct PredictedNormal {
  Vec3 normal;
  bool fallback = false;
};
/// normalize(R (2 out - 1)); falls back to `fallback` when the vector nearly vanishes.
PredictedNormal predict_normal(const Vec3& output, const Mat3& rotation, const Vec3& fallback);

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam update from the gradients held by the parameters.
/// Throws NonFiniteGradient (leaving the model untouched) on NaN/Inf.
void adam_step(GcnModel& model, const AdamOptions& options);

}  // namespace gcnd
