#pragma once

#include "gcnd/gcn.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace gcnd {

// Ordered GCN stages; stage 0 is trained on the raw noisy data.
struct Cascade {
  std::vector<GcnModel> stages;

  Cascade clone() const;
};

// Checkpoint layout (little-endian):
//   "GCNC" u32 version=1 u32 stage_count, then per stage a model block:
//   "GCNM" u32 version=1
//   u32 L_e u32 L_d u32 L_l u32 channel_count u32[channel_count] u32 K u32 N f64 k
//   u64 step u32 parameter_count
//   per parameter (GcnModel::parameters order): u32 rank u32[rank] dims,
//     f64[n] values, f64[n] Adam first moment, f64[n] Adam second moment
//   u32 norm_count, per batch-norm layer: u32 width f64[width] mean f64[width] var
void write_model(std::ostream& out, const GcnModel& model);
GcnModel read_model(std::istream& in);

void save_cascade(const Cascade& cascade, const std::filesystem::path& path);
Cascade load_cascade(const std::filesystem::path& path);

}  // namespace gcnd
