#pragma once

#include "gcnd/gcn.hpp"
#include "gcnd/mesh.hpp"
#include "gcnd/model_io.hpp"
#include "gcnd/patch_graph.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcnd {

struct TrainingPair {
  TriangleMesh noisy;
  TriangleMesh clean;  // same connectivity as noisy
  std::string name;
};

struct TrainingSample {
  PatchGraph graph;
  Vec3 target;  // ground-truth unit normal of the center face
};

struct TrainLogRecord {
  int stage = 0;  // 1-based
  int epoch = 0;  // 1-based within this run of the stage
  std::uint64_t step = 0;
  double mean_loss = 0.0;
  std::optional<double> validation_error;  // mean E_a over the validation pairs, degrees
};

struct TrainOptions {
  GcnConfig first = GcnConfig::first_stage();
  GcnConfig later = GcnConfig::later_stage();
  int stages = 2;
  std::vector<int> epochs{24, 16};  // per stage; the last entry repeats
  int batch_size = 128;
  AdamOptions adam;
  double balance_ratio = 1.5;
  int vertex_iterations = 15;
  std::uint64_t seed = 0;
  std::function<void(const TrainLogRecord&)> log;

  /// Reduced preset: every width divided by 4, epochs (8, 4), batch 32, learning rate 1e-3.
  static TrainOptions desk_scale();

  int epochs_for(int stage) const;  // 0-based stage
  const GcnConfig& config_for(int stage) const { return stage == 0 ? first : later; }
  void validate() const;
};

/// Faces used for training: all feature faces of the clean mesh plus a
/// balanced subset of non-feature faces; faces degenerate on the clean mesh are dropped.
std::vector<int> select_training_faces(const TriangleMesh& clean, double k, double ratio, std::uint64_t seed);

/// Patch graphs built on `current` for `faces`, targets from `clean`.
std::vector<TrainingSample> build_samples(const TriangleMesh& current, const TriangleMesh& clean,
                                          std::span<const int> faces, double k, int node_budget,
                                          std::uint64_t seed);

/// One pass over shuffled minibatches (a trailing batch smaller than 2 is
/// dropped since batch statistics need two rows). Returns the mean batch loss.
/// The shuffle is seeded by (seed, model.step) so resumed runs line up.
double train_epoch(GcnModel& model, std::span<const TrainingSample> samples, int batch_size,
                   const AdamOptions& adam, std::uint64_t seed);

/// Regresses normals with `model` and moves vertices toward them (no refinement).
TriangleMesh apply_stage(const TriangleMesh& mesh, const GcnModel& model, int vertex_iterations,
                         std::uint64_t seed);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Cascade last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}
  /// Completed stages plus the interrupted stage at its last finite state.
  const Cascade& last_valid() const { return last_valid_; }

 private:
  Cascade last_valid_;
};

/// Trains options.stages models in sequence, each on meshes updated by its
/// predecessors. With `resume`, its stages are reused: all but the last stay
/// frozen, the last continues training (step counter and Adam moments carry
/// over) for its configured epochs, then any remaining stages are trained.
Cascade train_cascade(std::span<const TrainingPair> data, const TrainOptions& options,
                      std::span<const TrainingPair> validation = {}, const Cascade* resume = nullptr);

}  // namespace gcnd
