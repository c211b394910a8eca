#include "gcnd/denoise.hpp"

#include "gcnd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gcnd {

void DenoiseParams::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("k must be positive");
  if (node_budget < 1) throw std::invalid_argument("node budget must be >= 1");
  if (refinement_iterations < 0) throw std::invalid_argument("refinement iterations must be >= 0");
  if (!(sigma_r > 0.0)) throw std::invalid_argument("sigma_r must be positive");
  if (vertex_iterations < 1) throw std::invalid_argument("vertex iterations must be >= 1");
  if (stages < 1) throw std::invalid_argument("stages must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

NormalPredictor model_predictor(const GcnModel& model) {
  return [&model](std::span<const PatchGraph> graphs) {
    const GraphBatch batch = make_batch(graphs);
    const ad::Tensor out = gcn_forward(model, batch);
    std::vector<Vec3> result(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) result[i] = Vec3(out.at(i, 0), out.at(i, 1), out.at(i, 2));
    return result;
  };
}

RegressedNormals regress_normals(const TriangleMesh& mesh, const NormalPredictor& predictor,
                                 const DenoiseParams& params) {
  params.validate();
  const PatchBuilder builder(mesh);
  const std::size_t faces = mesh.face_count();
  RegressedNormals out;
  out.normals.resize(faces);
  out.fallback.assign(faces, 0);
  const auto batch = static_cast<std::size_t>(params.batch_size);
  std::vector<PatchGraph> graphs;
  for (std::size_t start = 0; start < faces; start += batch) {
    const std::size_t count = std::min(batch, faces - start);
    graphs.assign(count, PatchGraph{});
    parallel_for(count, [&](std::size_t i) {
      graphs[i] = builder.build(static_cast<int>(start + i), params.k, params.node_budget, params.seed);
    });
    const std::vector<Vec3> raw = predictor(graphs);
    if (raw.size() != count) throw std::runtime_error("predictor returned the wrong number of outputs");
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t f = start + i;
      const auto p = predict_normal(raw[i], graphs[i].rotation, mesh.geometry()[f].normal);
      out.normals[f] = p.normal;
      out.fallback[f] = p.fallback ? 1 : 0;
    }
  }
  return out;
}

RegressedNormals regress_normals(const TriangleMesh& mesh, const GcnModel& model, const DenoiseParams& params) {
  if (model.config.node_budget != params.node_budget || model.config.patch_scale != params.k) {
    throw std::invalid_argument("model was trained with k = " + std::to_string(model.config.patch_scale) +
                                ", N = " + std::to_string(model.config.node_budget) +
                                " but denoising parameters request k = " + std::to_string(params.k) +
                                ", N = " + std::to_string(params.node_budget));
  }
  return regress_normals(mesh, model_predictor(model), params);
}

std::vector<Vec3> refine_normals(const TriangleMesh& mesh, std::span<const Vec3> normals, int iterations,
                                 double sigma_r) {
  if (iterations < 0) throw std::invalid_argument("refine_normals: iterations must be >= 0");
  std::vector<Vec3> current(normals.begin(), normals.end());
  if (iterations == 0) return current;
  const auto& geo = mesh.geometry();
  const double sigma_s = mean_centroid_distance(mesh);
  const double inv_s = 1.0 / (2.0 * sigma_s * sigma_s);
  const double inv_r = 1.0 / (2.0 * sigma_r * sigma_r);
  std::vector<Vec3> next(current.size());
  for (int it = 0; it < iterations; ++it) {
    parallel_for(current.size(), [&](std::size_t i) {
      Vec3 acc = Vec3::Zero();
      for (int j : mesh.vertex_ring(static_cast<int>(i))) {
        const double ds = (geo[j].centroid - geo[i].centroid).squaredNorm();
        const double dr = (current[j] - current[i]).squaredNorm();
        acc += geo[j].area * std::exp(-ds * inv_s) * std::exp(-dr * inv_r) * current[j];
      }
      const double len = acc.norm();
      next[i] = len > 0.0 ? Vec3(acc / len) : current[i];
    });
    std::swap(current, next);
  }
  return current;
}

TriangleMesh update_vertices(const TriangleMesh& mesh, std::span<const Vec3> normals, int iterations) {
  if (iterations < 1) throw std::invalid_argument("update_vertices: iterations must be >= 1");
  if (normals.size() != mesh.face_count()) throw std::invalid_argument("update_vertices: one normal per face required");
  const auto& faces = mesh.faces();
  std::vector<Vec3> current = mesh.vertices();
  std::vector<Vec3> next(current.size());
  for (int it = 0; it < iterations; ++it) {
    parallel_for(current.size(), [&](std::size_t v) {
      const auto ring = mesh.faces_of_vertex(static_cast<int>(v));
      if (ring.empty()) {
        next[v] = current[v];
        return;
      }
      Vec3 delta = Vec3::Zero();
      for (int f : ring) {
        const Vec3& n = normals[f];
        for (int u : faces[f]) {
          if (u == static_cast<int>(v)) continue;
          delta += n * n.dot(current[u] - current[v]);
        }
      }
      next[v] = current[v] + delta / (3.0 * static_cast<double>(ring.size()));
    });
    std::swap(current, next);
  }
  return mesh.with_vertices(std::move(current));
}

TriangleMesh denoise_mesh(const TriangleMesh& mesh, std::span<const NormalPredictor> stages,
                          const DenoiseParams& params) {
  params.validate();
  if (stages.empty()) throw std::invalid_argument("denoise_mesh: no stages");
  const std::size_t count = std::min<std::size_t>(stages.size(), static_cast<std::size_t>(params.stages));
  TriangleMesh current = mesh;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<Vec3> normals = regress_normals(current, stages[s], params).normals;
    if (s + 1 == count) normals = refine_normals(current, normals, params.refinement_iterations, params.sigma_r);
    current = update_vertices(current, normals, params.vertex_iterations);
  }
  return current;
}

DenoiseParams params_for(const GcnModel& model, DenoiseParams base) {
  base.k = model.config.patch_scale;
  base.node_budget = model.config.node_budget;
  return base;
}

TriangleMesh denoise_mesh(const TriangleMesh& mesh, const Cascade& cascade, const DenoiseParams& params) {
  params.validate();
  if (cascade.stages.empty()) throw std::invalid_argument("denoise_mesh: empty cascade");
  for (const auto& m : cascade.stages) {
    if (m.config.node_budget != params.node_budget || m.config.patch_scale != params.k) {
      throw std::invalid_argument("denoise_mesh: cascade stage (k, N) does not match denoising parameters");
    }
  }
  std::vector<NormalPredictor> predictors;
  for (const auto& m : cascade.stages) predictors.push_back(model_predictor(m));
  return denoise_mesh(mesh, predictors, params);
}

}  // namespace gcnd
