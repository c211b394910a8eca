#include "gcnd/train.hpp"

#include "gcnd/denoise.hpp"
#include "gcnd/metrics.hpp"
#include "gcnd/parallel.hpp"
#include "gcnd/rng.hpp"
#include "gcnd/tensor_voting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gcnd {

TrainOptions TrainOptions::desk_scale() {
  TrainOptions o;
  o.first = GcnConfig::first_stage().scaled(4);
  o.later = GcnConfig::later_stage().scaled(4);
  o.epochs = {8, 4};
  // few optimizer steps at this scale: larger steps, smaller batches
  o.batch_size = 32;
  o.adam.learning_rate = 1e-3;
  return o;
}

int TrainOptions::epochs_for(int stage) const {
  if (epochs.empty()) return 0;
  return epochs[std::min<std::size_t>(static_cast<std::size_t>(stage), epochs.size() - 1)];
}

void TrainOptions::validate() const {
  first.validate();
  later.validate();
  if (stages < 1) throw std::invalid_argument("stages must be >= 1");
  if (epochs.empty()) throw std::invalid_argument("epoch list is empty");
  for (int e : epochs)
    if (e < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("batch size must be >= 2");
  if (!(balance_ratio > 0.0)) throw std::invalid_argument("balance ratio must be positive");
  if (vertex_iterations < 1) throw std::invalid_argument("vertex iterations must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (first.node_budget != later.node_budget || first.patch_scale != later.patch_scale) {
    throw std::invalid_argument("all stages must share k and N");
  }
}

std::vector<int> select_training_faces(const TriangleMesh& clean, double k, double ratio, std::uint64_t seed) {
  const auto classes = classify_faces(clean, k);
  std::vector<std::pair<int, FacetClass>> classified;
  classified.reserve(classes.size());
  for (std::size_t f = 0; f < classes.size(); ++f) {
    if (clean.geometry()[f].degenerate) continue;
    classified.emplace_back(static_cast<int>(f), classes[f]);
  }
  return balance_samples(classified, ratio, seed);
}

std::vector<TrainingSample> build_samples(const TriangleMesh& current, const TriangleMesh& clean,
                                          std::span<const int> faces, double k, int node_budget,
                                          std::uint64_t seed) {
  if (!current.same_connectivity(clean)) throw std::invalid_argument("training pair connectivity differs");
  const PatchBuilder builder(current);
  std::vector<TrainingSample> out(faces.size());
  parallel_for(faces.size(), [&](std::size_t i) {
    out[i].graph = builder.build(faces[i], k, node_budget, seed);
    out[i].target = clean.geometry()[faces[i]].normal;
  });
  return out;
}

double train_epoch(GcnModel& model, std::span<const TrainingSample> samples, int batch_size,
                   const AdamOptions& adam, std::uint64_t seed) {
  if (batch_size < 2) throw std::invalid_argument("batch size must be >= 2");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, model.step));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  double total = 0.0;
  std::size_t batches = 0;
  std::vector<const PatchGraph*> graphs;
  std::vector<Vec3> targets;
  std::vector<Mat3> rotations;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min(order.size() - start, static_cast<std::size_t>(batch_size));
    if (count < 2) break;
    graphs.clear();
    targets.clear();
    rotations.clear();
    for (std::size_t i = start; i < start + count; ++i) {
      const TrainingSample& s = samples[order[i]];
      graphs.push_back(&s.graph);
      targets.push_back(s.target);
      rotations.push_back(s.graph.rotation);
    }
    const GraphBatch batch = make_batch(graphs);
    model.zero_grad();
    const ad::Tensor loss = loss_mse(gcn_forward(model, batch, true), targets, rotations);
    const double value = loss.item();
    if (!std::isfinite(value)) throw NonFiniteGradient("loss is not finite");
    loss.backward();
    adam_step(model, adam);
    total += value;
    ++batches;
  }
  return batches > 0 ? total / static_cast<double>(batches) : 0.0;
}

TriangleMesh apply_stage(const TriangleMesh& mesh, const GcnModel& model, int vertex_iterations,
                         std::uint64_t seed) {
  DenoiseParams params = params_for(model, DenoiseParams{});
  params.seed = seed;
  params.vertex_iterations = vertex_iterations;
  const auto regressed = regress_normals(mesh, model, params);
  return update_vertices(mesh, regressed.normals, vertex_iterations);
}

namespace {

double validation_error(std::span<const TriangleMesh> current, std::span<const TrainingPair> validation,
                        const GcnModel& model, int vertex_iterations, std::uint64_t seed) {
  double sum = 0.0;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const TriangleMesh out = apply_stage(current[i], model, vertex_iterations, seed);
    sum += angular_error(out, validation[i].clean).mean_degrees;
  }
  return sum / static_cast<double>(validation.size());
}

}  // namespace

Cascade train_cascade(std::span<const TrainingPair> data, const TrainOptions& options,
                      std::span<const TrainingPair> validation, const Cascade* resume) {
  options.validate();
  if (data.empty()) throw std::invalid_argument("training set is empty");
  if (resume != nullptr && resume->stages.empty()) throw std::invalid_argument("resume checkpoint has no stages");
  if (resume != nullptr && static_cast<int>(resume->stages.size()) > options.stages) {
    throw std::invalid_argument("resume checkpoint has more stages than requested");
  }
  const double k = options.first.patch_scale;
  const int node_budget = options.first.node_budget;

  std::vector<std::vector<int>> faces(data.size());
  std::vector<TriangleMesh> current;
  current.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const TrainingPair& p = data[i];
    if (!p.noisy.same_connectivity(p.clean)) {
      throw std::invalid_argument("training pair '" + p.name + "': noisy and clean connectivity differ");
    }
    faces[i] = select_training_faces(p.clean, k, options.balance_ratio, mix_seed(options.seed, i));
    current.push_back(p.noisy);
  }
  std::vector<TriangleMesh> val_current;
  for (const TrainingPair& p : validation) {
    if (!p.noisy.same_connectivity(p.clean)) {
      throw std::invalid_argument("validation pair '" + p.name + "': noisy and clean connectivity differ");
    }
    val_current.push_back(p.noisy);
  }

  Cascade cascade;
  const int resumed = resume != nullptr ? static_cast<int>(resume->stages.size()) : 0;
  for (int stage = 0; stage < options.stages; ++stage) {
    const std::uint64_t stage_seed = mix_seed(options.seed, 0x5747ull + static_cast<std::uint64_t>(stage));
    const bool frozen = stage < resumed - 1;
    if (frozen) {
      cascade.stages.push_back(resume->stages[stage].clone());
    } else {
      GcnModel model = stage < resumed ? resume->stages[stage].clone()
                                       : GcnModel(options.config_for(stage), mix_seed(stage_seed, 1));
      if (model.config.node_budget != node_budget || model.config.patch_scale != k) {
        throw std::invalid_argument("resumed stage does not match the requested k and N");
      }
      std::vector<TrainingSample> samples;
      for (std::size_t i = 0; i < data.size(); ++i) {
        auto part = build_samples(current[i], data[i].clean, faces[i], k, node_budget, options.seed);
        samples.insert(samples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      if (samples.size() < 2) throw std::invalid_argument("training set yields fewer than two samples");
      const int epochs = options.epochs_for(stage);
      for (int epoch = 0; epoch < epochs; ++epoch) {
        TrainLogRecord rec;
        rec.stage = stage + 1;
        rec.epoch = epoch + 1;
        try {
          rec.mean_loss = train_epoch(model, samples, options.batch_size, options.adam, stage_seed);
        } catch (const NonFiniteGradient& e) {
          Cascade partial = cascade.clone();
          partial.stages.push_back(model.clone());
          throw TrainingDiverged(std::string("training diverged in stage ") + std::to_string(stage + 1) + ": " +
                                     e.what(),
                                 std::move(partial));
        }
        rec.step = model.step;
        if (!validation.empty()) {
          rec.validation_error = validation_error(val_current, validation, model, options.vertex_iterations,
                                                  options.seed);
        }
        if (options.log) options.log(rec);
      }
      cascade.stages.push_back(std::move(model));
    }
    if (stage + 1 < options.stages) {
      const GcnModel& done = cascade.stages.back();
      for (TriangleMesh& m : current) m = apply_stage(m, done, options.vertex_iterations, options.seed);
      for (TriangleMesh& m : val_current) m = apply_stage(m, done, options.vertex_iterations, options.seed);
    }
  }
  return cascade;
}

}  // namespace gcnd
