#include "gcnd/model_io.hpp"

#include "gcnd/binary_io.hpp"

#include <fstream>
#include <stdexcept>

namespace gcnd {

Cascade Cascade::clone() const {
  Cascade c;
  for (const auto& m : stages) c.stages.push_back(m.clone());
  return c;
}

void write_model(std::ostream& out, const GcnModel& model) {
  using namespace binary;
  const GcnConfig& c = model.config;
  put_magic(out, "GCNM");
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(c.static_layers));
  put_u32(out, static_cast<std::uint32_t>(c.dynamic_layers));
  put_u32(out, static_cast<std::uint32_t>(c.fc_layers));
  put_u32(out, static_cast<std::uint32_t>(c.channels.size()));
  for (int w : c.channels) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(c.knn));
  put_u32(out, static_cast<std::uint32_t>(c.node_budget));
  put_f64(out, c.patch_scale);
  put_u64(out, model.step);

  const auto params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    put_u32(out, static_cast<std::uint32_t>(p.shape().size()));
    for (auto d : p.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : p.data()) put_f64(out, v);
    const bool has_moments = k < model.moments.size() && model.moments[k].first.size() == p.size();
    for (std::size_t i = 0; i < p.size(); ++i) put_f64(out, has_moments ? model.moments[k].first[i] : 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) put_f64(out, has_moments ? model.moments[k].second[i] : 0.0);
  }
  const auto stats = model.norm_stats();
  put_u32(out, static_cast<std::uint32_t>(stats.size()));
  for (const auto* s : stats) {
    put_u32(out, static_cast<std::uint32_t>(s->mean.size()));
    for (double v : s->mean) put_f64(out, v);
    for (double v : s->var) put_f64(out, v);
  }
}

GcnModel read_model(std::istream& in) {
  using namespace binary;
  expect_magic(in, "GCNM", "model");
  if (get_u32(in) != 1) throw std::runtime_error("unsupported model version");
  GcnConfig c;
  c.static_layers = static_cast<int>(get_u32(in));
  c.dynamic_layers = static_cast<int>(get_u32(in));
  c.fc_layers = static_cast<int>(get_u32(in));
  c.channels.resize(get_u32(in));
  for (int& w : c.channels) w = static_cast<int>(get_u32(in));
  c.knn = static_cast<int>(get_u32(in));
  c.node_budget = static_cast<int>(get_u32(in));
  c.patch_scale = get_f64(in);
  GcnModel model(c, 0);
  model.step = get_u64(in);

  auto params = model.parameters();
  if (get_u32(in) != params.size()) throw std::runtime_error("model file: parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const std::uint32_t rank = get_u32(in);
    if (rank != p.shape().size()) throw std::runtime_error("model file: parameter rank mismatch");
    for (auto d : p.shape()) {
      if (get_u32(in) != d) throw std::runtime_error("model file: parameter shape mismatch");
    }
    for (double& v : p.mutable_data()) v = get_f64(in);
    for (double& v : model.moments[k].first) v = get_f64(in);
    for (double& v : model.moments[k].second) v = get_f64(in);
  }
  auto stats = model.norm_stats();
  if (get_u32(in) != stats.size()) throw std::runtime_error("model file: batch-norm count mismatch");
  for (auto* s : stats) {
    const std::uint32_t width = get_u32(in);
    if (width != s->mean.size()) throw std::runtime_error("model file: batch-norm width mismatch");
    for (double& v : s->mean) v = get_f64(in);
    for (double& v : s->var) v = get_f64(in);
  }
  return model;
}

void save_cascade(const Cascade& cascade, const std::filesystem::path& path) {
  using namespace binary;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  put_magic(out, "GCNC");
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(cascade.stages.size()));
  for (const auto& m : cascade.stages) write_model(out, m);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Cascade load_cascade(const std::filesystem::path& path) {
  using namespace binary;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  expect_magic(in, "GCNC", "cascade");
  if (get_u32(in) != 1) throw std::runtime_error("unsupported cascade version");
  Cascade c;
  const std::uint32_t n = get_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) c.stages.push_back(read_model(in));
  return c;
}

}  // namespace gcnd
