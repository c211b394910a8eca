#include "gcnd/gcn.hpp"

#include "gcnd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <type_traits>

namespace gcnd {

GcnConfig GcnConfig::first_stage() { return GcnConfig{}; }

GcnConfig GcnConfig::later_stage() {
  GcnConfig c;
  c.static_layers = 2;
  c.dynamic_layers = 2;
  c.fc_layers = 3;
  c.channels = {64, 128, 256, 256, 512, 256, 64};
  return c;
}

GcnConfig GcnConfig::scaled(int divisor) const {
  GcnConfig c = *this;
  for (int& w : c.channels) w = std::max(1, w / divisor);
  return c;
}

void GcnConfig::validate() const {
  if (static_layers < 0 || dynamic_layers < 0 || fc_layers < 0) throw std::invalid_argument("layer counts must be >= 0");
  if (static_layers + dynamic_layers < 1) throw std::invalid_argument("at least one convolution layer is required");
  if (static_cast<int>(channels.size()) != static_layers + dynamic_layers + fc_layers) {
    throw std::invalid_argument("channel list length must equal L_e + L_d + L_l");
  }
  for (int w : channels) {
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  }
  if (knn < 1) throw std::invalid_argument("K must be >= 1");
  if (node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
  if (!(patch_scale > 0.0)) throw std::invalid_argument("patch scale must be positive");
}

int GcnConfig::conv_width_sum() const {
  return std::accumulate(channels.begin(), channels.begin() + static_layers + dynamic_layers, 0);
}

namespace {

ad::Tensor uniform_tensor(ad::Shape shape, double bound, Rng& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  return ad::Tensor(std::move(shape), std::move(v), true);
}

ad::Tensor filled(std::size_t n, double value) { return ad::Tensor({n}, std::vector<double>(n, value), true); }

BatchNormLayer make_norm(std::size_t width) {
  return {filled(width, 1.0), filled(width, 0.0), {std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)}};
}

ad::Tensor copy_param(const ad::Tensor& t) {
  ad::Tensor c(t.shape(), std::vector<double>(t.data().begin(), t.data().end()), true);
  return c;
}

BatchNormLayer copy_norm(const BatchNormLayer& n) { return {copy_param(n.gamma), copy_param(n.beta), n.running}; }

}  // namespace

GcnModel::GcnModel(GcnConfig cfg, std::uint64_t seed) : config(std::move(cfg)) {
  config.validate();
  Rng rng(seed);
  std::size_t in = kNodeFeatures;
  const int convs_total = config.static_layers + config.dynamic_layers;
  for (int l = 0; l < convs_total; ++l) {
    const auto out = static_cast<std::size_t>(config.channels[l]);
    const double bound = 1.0 / std::sqrt(2.0 * static_cast<double>(in));
    EdgeConvLayer layer;
    layer.weight_self = uniform_tensor({out, in}, bound, rng);
    layer.weight_diff = uniform_tensor({out, in}, bound, rng);
    layer.bias = uniform_tensor({out}, bound, rng);
    layer.norm = make_norm(out);
    convs.push_back(std::move(layer));
    in = out;
  }
  in = 2 * static_cast<std::size_t>(config.conv_width_sum());
  for (int l = 0; l <= config.fc_layers; ++l) {
    const bool head = l == config.fc_layers;
    const auto out = head ? std::size_t{3} : static_cast<std::size_t>(config.channels[convs_total + l]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer;
    layer.weight = uniform_tensor({out, in}, bound, rng);
    layer.bias = uniform_tensor({out}, bound, rng);
    if (!head) layer.norm = make_norm(out);
    dense.push_back(std::move(layer));
    in = out;
  }
  for (const auto& p : parameters()) moments.push_back({std::vector<double>(p.size(), 0.0), std::vector<double>(p.size(), 0.0)});
}

GcnModel GcnModel::clone() const {
  GcnModel m;
  m.config = config;
  m.step = step;
  m.moments = moments;
  for (const auto& c : convs) {
    m.convs.push_back({copy_param(c.weight_self), copy_param(c.weight_diff), copy_param(c.bias), copy_norm(c.norm)});
  }
  for (const auto& d : dense) {
    DenseLayer layer{copy_param(d.weight), copy_param(d.bias), std::nullopt};
    if (d.norm) layer.norm = copy_norm(*d.norm);
    m.dense.push_back(std::move(layer));
  }
  return m;
}

std::vector<ad::Tensor> GcnModel::parameters() const {
  std::vector<ad::Tensor> out;
  for (const auto& c : convs) {
    out.insert(out.end(), {c.weight_self, c.weight_diff, c.bias, c.norm.gamma, c.norm.beta});
  }
  for (const auto& d : dense) {
    out.push_back(d.weight);
    out.push_back(d.bias);
    if (d.norm) {
      out.push_back(d.norm->gamma);
      out.push_back(d.norm->beta);
    }
  }
  return out;
}

std::vector<ad::BatchNormStats*> GcnModel::norm_stats() {
  std::vector<ad::BatchNormStats*> out;
  for (auto& c : convs) out.push_back(&c.norm.running);
  for (auto& d : dense)
    if (d.norm) out.push_back(&d.norm->running);
  return out;
}

std::vector<const ad::BatchNormStats*> GcnModel::norm_stats() const {
  std::vector<const ad::BatchNormStats*> out;
  for (const auto& c : convs) out.push_back(&c.norm.running);
  for (const auto& d : dense)
    if (d.norm) out.push_back(&d.norm->running);
  return out;
}

void GcnModel::zero_grad() {
  for (auto p : parameters()) p.zero_grad();
}

GraphBatch make_batch(std::span<const PatchGraph* const> graphs) {
  if (graphs.empty()) throw std::invalid_argument("make_batch: no graphs");
  const int n = graphs.front()->node_count;
  GraphBatch batch;
  batch.graphs = static_cast<int>(graphs.size());
  batch.nodes_per_graph = n;
  std::vector<double> features(batch.rows() * kNodeFeatures);
  auto node_graph = std::make_shared<std::vector<int>>(batch.rows(), -1);
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const PatchGraph& pg = *graphs[g];
    if (pg.node_count != n) throw std::invalid_argument("make_batch: graphs differ in node count");
    const int base = static_cast<int>(g) * n;
    std::copy(pg.attrs.begin(), pg.attrs.end(), features.begin() + static_cast<std::ptrdiff_t>(base) * kNodeFeatures);
    for (int i = 0; i < n; ++i) {
      if (!pg.is_valid(i)) continue;
      (*node_graph)[base + i] = static_cast<int>(g);
      src->push_back(base + i);
      dst->push_back(base + i);
    }
    for (const auto& e : pg.edges) {
      src->push_back(base + e[0]);
      dst->push_back(base + e[1]);
      src->push_back(base + e[1]);
      dst->push_back(base + e[0]);
    }
  }
  batch.features = ad::Tensor({batch.rows(), static_cast<std::size_t>(kNodeFeatures)}, std::move(features));
  batch.node_graph = std::move(node_graph);
  batch.pair_src = std::move(src);
  batch.pair_dst = std::move(dst);
  return batch;
}

GraphBatch make_batch(std::span<const PatchGraph> graphs) {
  std::vector<const PatchGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return make_batch(std::span<const PatchGraph* const>(ptrs));
}

PairList knn_pairs(std::span<const double> features, std::size_t cols, const std::vector<int>& node_graph,
                   int nodes_per_graph, int k) {
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  const std::size_t graphs = node_graph.size() / static_cast<std::size_t>(nodes_per_graph);
  std::vector<int> valid;
  std::vector<std::pair<double, int>> candidates;
  for (std::size_t g = 0; g < graphs; ++g) {
    valid.clear();
    const int base = static_cast<int>(g) * nodes_per_graph;
    for (int i = 0; i < nodes_per_graph; ++i) {
      if (node_graph[base + i] >= 0) valid.push_back(base + i);
    }
    if (valid.empty()) throw std::invalid_argument("dynamic edge conv: graph has no valid nodes");
    const int kk = std::min<int>(k, static_cast<int>(valid.size()) - 1);
    for (int i : valid) {
      src->push_back(i);
      dst->push_back(i);
      if (kk <= 0) continue;
      candidates.clear();
      const double* fi = features.data() + static_cast<std::size_t>(i) * cols;
      for (int j : valid) {
        if (j == i) continue;
        const double* fj = features.data() + static_cast<std::size_t>(j) * cols;
        double d = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          const double t = fi[c] - fj[c];
          d += t * t;
        }
        candidates.emplace_back(d, j);
      }
      std::partial_sort(candidates.begin(), candidates.begin() + kk, candidates.end());
      for (int q = 0; q < kk; ++q) {
        src->push_back(i);
        dst->push_back(candidates[q].second);
      }
    }
  }
  return {std::move(src), std::move(dst)};
}

ad::Tensor edge_conv(const ad::Tensor& features, const PairList& pairs, const EdgeConvLayer& layer, bool training,
                     ad::BatchNormStats* update_running) {
  if (features.cols() != layer.weight_self.cols()) throw std::invalid_argument("edge_conv: feature width mismatch");
  const ad::Tensor self_part = ad::matmul_nt(features, layer.weight_self);
  const ad::Tensor nbr_part = ad::matmul_nt(features, layer.weight_diff);
  ad::Tensor h = ad::add_bias(ad::pair_combine(self_part, nbr_part, pairs.src, pairs.dst), layer.bias);
  h = training ? ad::batch_norm_train(h, layer.norm.gamma, layer.norm.beta, kBatchNormEps, update_running,
                                      kBatchNormMomentum)
               : ad::batch_norm_eval(h, layer.norm.gamma, layer.norm.beta, layer.norm.running, kBatchNormEps);
  h = ad::leaky_relu(h, kLeakySlope);
  return ad::segment_max(h, pairs.src, features.rows());
}

ad::Tensor dynamic_edge_conv(const ad::Tensor& features, const GraphBatch& batch, int k, const EdgeConvLayer& layer,
                             bool training, ad::BatchNormStats* update_running) {
  const PairList pairs = knn_pairs(features.data(), features.cols(), *batch.node_graph, batch.nodes_per_graph, k);
  return edge_conv(features, pairs, layer, training, update_running);
}

namespace {

template <typename Model>
ad::Tensor forward_impl(Model& model, const GraphBatch& batch, bool training) {
  constexpr bool can_update = !std::is_const_v<Model>;
  const GcnConfig& cfg = model.config;
  if (batch.nodes_per_graph != cfg.node_budget) {
    throw std::invalid_argument("gcn_forward: graph node count " + std::to_string(batch.nodes_per_graph) +
                                " does not match model node budget " + std::to_string(cfg.node_budget));
  }
  const PairList static_pairs{batch.pair_src, batch.pair_dst};
  std::vector<ad::Tensor> layer_outputs;
  ad::Tensor x = batch.features;
  for (std::size_t l = 0; l < model.convs.size(); ++l) {
    auto& layer = model.convs[l];
    ad::BatchNormStats* stats = nullptr;
    if constexpr (can_update) {
      if (training) stats = &layer.norm.running;
    }
    if (static_cast<int>(l) < cfg.static_layers) {
      x = edge_conv(x, static_pairs, layer, training, stats);
    } else {
      x = dynamic_edge_conv(x, batch, cfg.knn, layer, training, stats);
    }
    layer_outputs.push_back(x);
  }
  const ad::Tensor stacked = ad::concat_cols(layer_outputs);
  const auto b = static_cast<std::size_t>(batch.graphs);
  ad::Tensor h = ad::concat_cols({ad::segment_mean(stacked, batch.node_graph, b),
                                  ad::segment_max(stacked, batch.node_graph, b)});
  for (auto& layer : model.dense) {
    h = ad::add_bias(ad::matmul_nt(h, layer.weight), layer.bias);
    if (layer.norm) {
      ad::BatchNormStats* stats = nullptr;
      if constexpr (can_update) {
        if (training) stats = &layer.norm->running;
      }
      h = training ? ad::batch_norm_train(h, layer.norm->gamma, layer.norm->beta, kBatchNormEps, stats,
                                          kBatchNormMomentum)
                   : ad::batch_norm_eval(h, layer.norm->gamma, layer.norm->beta, layer.norm->running, kBatchNormEps);
      h = ad::leaky_relu(h, kLeakySlope);
    }
  }
  return h;
}

}  // namespace

ad::Tensor gcn_forward(GcnModel& model, const GraphBatch& batch, bool training) {
  return forward_impl(model, batch, training);
}

ad::Tensor gcn_forward(const GcnModel& model, const GraphBatch& batch) { return forward_impl(model, batch, false); }

Vec3 mapped_target(const Vec3& normal, const Mat3& rotation) {
  return (rotation.transpose() * normal + Vec3::Ones()) / 2.0;
}

ad::Tensor loss_mse(const ad::Tensor& prediction, std::span<const Vec3> targets, std::span<const Mat3> rotations) {
  if (prediction.rows() != targets.size() || prediction.cols() != 3 || rotations.size() != targets.size()) {
    throw std::invalid_argument("loss_mse: prediction/target/rotation count mismatch");
  }
  std::vector<double> mapped(targets.size() * 3);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (std::abs(targets[i].norm() - 1.0) > 1e-6) throw std::invalid_argument("loss_mse: target normal is not unit");
    const Vec3 t = mapped_target(targets[i], rotations[i]);
    for (int c = 0; c < 3; ++c) mapped[i * 3 + c] = t[c];
  }
  return ad::mse(prediction, mapped);
}

PredictedNormal predict_normal(const Vec3& output, const Mat3& rotation, const Vec3& fallback) {
  const Vec3 v = rotation * (2.0 * output - Vec3::Ones());
  const double len = v.norm();
  if (!(len >= 1e-8) || !std::isfinite(len)) return {fallback, true};
  return {v / len, false};
}

void adam_step(GcnModel& model, const AdamOptions& o) {
  auto params = model.parameters();
  if (model.moments.size() != params.size()) {
    model.moments.clear();
    for (const auto& p : params) model.moments.push_back({std::vector<double>(p.size(), 0.0), std::vector<double>(p.size(), 0.0)});
  }
  for (const auto& p : params) {
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NonFiniteGradient("adam_step: non-finite gradient, step aborted");
    }
  }
  const double t = static_cast<double>(model.step + 1);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const auto g = p.grad();
    auto data = p.mutable_data();
    auto& m = model.moments[k].first;
    auto& v = model.moments[k].second;
    for (std::size_t i = 0; i < data.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      data[i] -= o.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.epsilon);
    }
  }
  ++model.step;
}

}  // namespace gcnd
