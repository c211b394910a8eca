// gcnd: synthesize noisy meshes, train GCN cascades, denoise, evaluate and
// inspect facet classification.

#include "gcnd/denoise.hpp"
#include "gcnd/metrics.hpp"
#include "gcnd/model_io.hpp"
#include "gcnd/noise.hpp"
#include "gcnd/parallel.hpp"
#include "gcnd/patch_graph.hpp"
#include "gcnd/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace gcnd;

namespace {

// Bad input or arguments (exit 2); anything else that fails exits 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void apply_threads(int threads) {
  if (threads < 0) throw UsageError("--threads must be >= 0");
  unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  set_thread_count(n);
}

TriangleMesh load_input(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path.string());
  try {
    return load_obj(path);
  } catch (const MeshError& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::vector<TrainingPair> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<TrainingPair> pairs;
  std::vector<std::string> problems;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      problems.push_back(path.string() + ":" + std::to_string(number) + ": expected noisy<TAB>clean");
      continue;
    }
    const fs::path noisy = base / line.substr(0, tab);
    const fs::path clean = base / line.substr(tab + 1);
    try {
      TriangleMesh n = load_input(noisy);
      TriangleMesh c = load_input(clean);
      if (!n.same_connectivity(c)) {
        problems.push_back(noisy.string() + " / " + clean.string() + ": connectivity differs");
        continue;
      }
      pairs.push_back({std::move(n), std::move(c), noisy.string()});
    } catch (const UsageError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "manifest " + path.string() + " is invalid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw UsageError(msg);
  }
  if (pairs.empty()) throw UsageError("manifest " + path.string() + " lists no mesh pairs");
  return pairs;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("not an integer list: " + text);
    }
  }
  return out;
}

struct SynthArgs {
  std::string kind = "gaussian";
  double level = 0.0;
  std::uint64_t seed = 0;
  std::string in, out;
};

int run_synth(const SynthArgs& a) {
  NoiseSpec spec;
  try {
    spec.kind = parse_noise_kind(a.kind);
    spec.level = a.level;
    spec.seed = a.seed;
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  save_obj(add_noise(load_input(a.in), spec), a.out);
  return 0;
}

struct TrainArgs {
  std::string manifest, out;
  std::string validation, resume, log;
  bool desk_scale = false;
  std::string epochs;
  int stages = 2;
  int batch = 0;
  double lr = 0.0;
  double ratio = 1.5;
  double k = 4.0;
  int nodes = 64;
  int knn = 8;
  int vertex_iterations = 15;
  std::uint64_t seed = 0;
  int threads = 0;
};

int run_train(const TrainArgs& a) {
  apply_threads(a.threads);
  TrainOptions o = a.desk_scale ? TrainOptions::desk_scale() : TrainOptions{};
  o.stages = a.stages;
  if (!a.epochs.empty()) o.epochs = parse_int_list(a.epochs);
  if (a.batch > 0) o.batch_size = a.batch;
  if (a.lr > 0.0) o.adam.learning_rate = a.lr;
  o.balance_ratio = a.ratio;
  o.vertex_iterations = a.vertex_iterations;
  o.seed = a.seed;
  for (GcnConfig* c : {&o.first, &o.later}) {
    c->patch_scale = a.k;
    c->node_budget = a.nodes;
    c->knn = a.knn;
  }
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto data = read_manifest(a.manifest);
  std::vector<TrainingPair> validation;
  if (!a.validation.empty()) validation = read_manifest(a.validation);
  Cascade resumed;
  if (!a.resume.empty()) {
    if (!fs::exists(a.resume)) throw UsageError("no such checkpoint: " + a.resume);
    resumed = load_cascade(a.resume);
  }

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    if (!log) throw std::runtime_error("cannot write " + a.log);
  }
  std::optional<double> last_validation;
  o.log = [&](const TrainLogRecord& r) {
    nlohmann::json j{{"stage", r.stage}, {"epoch", r.epoch}, {"step", r.step}, {"mean_loss", r.mean_loss}};
    j["validation_ea"] = r.validation_error ? nlohmann::json(*r.validation_error) : nlohmann::json(nullptr);
    if (r.validation_error) last_validation = r.validation_error;
    if (log) log << j.dump() << '\n' << std::flush;
    std::fprintf(stderr, "stage %d epoch %d loss %.6f%s\n", r.stage, r.epoch, r.mean_loss,
                 r.validation_error ? (" val E_a " + std::to_string(*r.validation_error)).c_str() : "");
  };
  try {
    const Cascade cascade = train_cascade(data, o, validation, a.resume.empty() ? nullptr : &resumed);
    save_cascade(cascade, a.out);
  } catch (const TrainingDiverged& e) {
    save_cascade(e.last_valid(), a.out);
    std::fprintf(stderr, "%s (last valid state written to %s)\n", e.what(), a.out.c_str());
    return 1;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (last_validation) std::printf("final validation E_a %.2f\n", *last_validation);
  return 0;
}

struct DenoiseArgs {
  std::string in, model, out, truth;
  int refine = 1;
  double sigma_r = 0.3;
  int vertex_iterations = 15;
  int stages = 0;
  int batch = 256;
  std::uint64_t seed = 0;
  bool report = false;
  int threads = 0;
};

void print_report(const EvalReport& r) {
  std::printf("E_a %.2f\n", r.angular_error);
  std::printf("E_v %.2e\n", r.vertex_distance);
}

int run_denoise(const DenoiseArgs& a) {
  apply_threads(a.threads);
  if (!fs::exists(a.model)) throw UsageError("no such model file: " + a.model);
  if (a.report && a.truth.empty()) throw UsageError("--report needs --truth");
  const TriangleMesh mesh = load_input(a.in);
  const Cascade cascade = load_cascade(a.model);
  if (cascade.stages.empty()) throw UsageError("model file has no stages");
  DenoiseParams p;
  p.refinement_iterations = a.refine;
  p.sigma_r = a.sigma_r;
  p.vertex_iterations = a.vertex_iterations;
  p.stages = a.stages > 0 ? a.stages : static_cast<int>(cascade.stages.size());
  p.batch_size = a.batch;
  p.seed = a.seed;
  p = params_for(cascade.stages.front(), p);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const TriangleMesh out = denoise_mesh(mesh, cascade, p);
  save_obj(out, a.out);
  if (a.report) {
    const TriangleMesh truth = load_input(a.truth);
    if (!truth.same_connectivity(out)) throw UsageError("ground truth connectivity differs from the input");
    print_report(evaluate(out, truth, 0, a.seed));
  }
  return 0;
}

struct EvalArgs {
  std::string denoised, truth, per_face;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  const TriangleMesh d = load_input(a.denoised);
  const TriangleMesh t = load_input(a.truth);
  if (d.face_count() != t.face_count() || d.faces() != t.faces()) {
    throw UsageError("meshes do not share connectivity (" + std::to_string(d.face_count()) + " vs " +
                     std::to_string(t.face_count()) + " faces)");
  }
  const EvalReport r = evaluate(d, t, a.samples, a.seed);
  print_report(r);
  if (!a.per_face.empty()) {
    std::ofstream out(a.per_face);
    if (!out) throw std::runtime_error("cannot write " + a.per_face);
    char buf[64];
    for (std::size_t f = 0; f < r.per_face.size(); ++f) {
      if (r.excluded[f]) {
        out << f << " nan\n";
      } else {
        std::snprintf(buf, sizeof buf, "%zu %.6f\n", f, r.per_face[f]);
        out << buf;
      }
    }
  }
  return 0;
}

struct ClassifyArgs {
  std::string mesh, out;
  double k = 4.0;
};

int run_classify(const ClassifyArgs& a) {
  if (!(a.k > 0.0)) throw UsageError("--k must be positive");
  const auto classes = classify_faces(load_input(a.mesh), a.k);
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot write " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  for (std::size_t f = 0; f < classes.size(); ++f) os << f << ' ' << to_string(classes[f]) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GCN-based mesh denoising toolkit"};
  app.set_config("--config", "", "key = value file; flags given on the command line win");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "add synthetic noise to a mesh");
  s->add_option("--kind", synth.kind, "gaussian or impulsive")->capture_default_str();
  s->add_option("--level", synth.level, "noise level (fraction of the mean edge length)")->capture_default_str();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("input", synth.in)->required();
  s->add_option("output", synth.out)->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train a GCN cascade from a manifest of noisy<TAB>clean OBJ pairs");
  t->add_option("manifest", train.manifest)->required();
  t->add_option("model", train.out, "output checkpoint")->required();
  t->add_flag("--desk-scale", train.desk_scale, "reduced widths and epochs");
  t->add_option("--validation", train.validation, "manifest of pairs for per-epoch E_a");
  t->add_option("--resume", train.resume, "continue from a checkpoint");
  t->add_option("--log", train.log, "line-delimited JSON training log");
  t->add_option("--epochs", train.epochs, "comma separated epochs per stage");
  t->add_option("--stages", train.stages)->capture_default_str();
  t->add_option("--batch", train.batch, "batch size (default 128, desk preset 32)");
  t->add_option("--lr", train.lr, "learning rate (default 1e-4, desk preset 1e-3)");
  t->add_option("--ratio", train.ratio, "feature / non-feature balance ratio")->capture_default_str();
  t->add_option("--k", train.k, "patch scale")->capture_default_str();
  t->add_option("--nodes", train.nodes, "nodes per patch graph")->capture_default_str();
  t->add_option("--knn", train.knn, "dynamic neighbors")->capture_default_str();
  t->add_option("--vertex-iterations", train.vertex_iterations)->capture_default_str();
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--threads", train.threads, "0 = all cores; 1 = bit-reproducible")->capture_default_str();

  DenoiseArgs den;
  auto* d = app.add_subcommand("denoise", "denoise a mesh with a trained cascade");
  d->add_option("input", den.in)->required();
  d->add_option("model", den.model)->required();
  d->add_option("output", den.out)->required();
  d->add_option("--refine", den.refine, "normal refinement iterations m")->capture_default_str();
  d->add_option("--sigma-r", den.sigma_r)->capture_default_str();
  d->add_option("--vertex-iterations", den.vertex_iterations)->capture_default_str();
  d->add_option("--stages", den.stages, "stages to run (0 = all)")->capture_default_str();
  d->add_option("--batch", den.batch, "inference batch size")->capture_default_str();
  d->add_option("--seed", den.seed)->capture_default_str();
  d->add_flag("--report", den.report, "print E_a / E_v against --truth");
  d->add_option("--truth", den.truth, "ground-truth mesh");
  d->add_option("--threads", den.threads, "0 = all cores; 1 = bit-reproducible")->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "compare a mesh with its ground truth");
  e->add_option("denoised", ev.denoised)->required();
  e->add_option("truth", ev.truth)->required();
  e->add_option("--samples", ev.samples, "surface samples (0 = 10 per face)")->capture_default_str();
  e->add_option("--seed", ev.seed)->capture_default_str();
  e->add_option("--per-face", ev.per_face, "write `face error_degrees` lines");

  ClassifyArgs cls;
  auto* c = app.add_subcommand("classify", "print `face_index class` for every face");
  c->add_option("mesh", cls.mesh)->required();
  c->add_option("--k", cls.k, "patch scale")->capture_default_str();
  c->add_option("--out", cls.out, "write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (d->parsed()) return run_denoise(den);
    if (e->parsed()) return run_eval(ev);
    if (c->parsed()) return run_classify(cls);
  } catch (const UsageError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 2;
}
