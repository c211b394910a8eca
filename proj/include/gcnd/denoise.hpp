#pragma once

#include "gcnd/gcn.hpp"
#include "gcnd/mesh.hpp"
#include "gcnd/model_io.hpp"
#include "gcnd/patch_graph.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gcnd {

struct DenoiseParams {
  double k = 4.0;
  int node_budget = 64;
  int refinement_iterations = 1;  // m; 12 suits CAD-like and scanned meshes
  double sigma_r = 0.3;
  int vertex_iterations = 15;
  int stages = 2;
  int batch_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Maps a batch of patch graphs to raw (0,1)-space outputs, one per graph.
using NormalPredictor = std::function<std::vector<Vec3>(std::span<const PatchGraph>)>;

NormalPredictor model_predictor(const GcnModel& model);

struct RegressedNormals {
  std::vector<Vec3> normals;
  std::vector<char> fallback;  // predict_normal fell back to the current face normal
};

RegressedNormals regress_normals(const TriangleMesh& mesh, const NormalPredictor& predictor,
                                 const DenoiseParams& params);
/// Throws std::invalid_argument when the model's (k, N) differ from params.
RegressedNormals regress_normals(const TriangleMesh& mesh, const GcnModel& model, const DenoiseParams& params);

/// m Jacobi iterations of the bilateral normal filter over vertex-sharing
/// neighbors, sigma_s = mean centroid distance, Gaussian kernels.
std::vector<Vec3> refine_normals(const TriangleMesh& mesh, std::span<const Vec3> normals, int iterations,
                                 double sigma_r);

/// Iterative vertex updating toward per-face target normals; isolated vertices stay put.
TriangleMesh update_vertices(const TriangleMesh& mesh, std::span<const Vec3> normals, int iterations);

/// Runs params.stages predictors in sequence; refinement only after the last.
TriangleMesh denoise_mesh(const TriangleMesh& mesh, std::span<const NormalPredictor> stages,
                          const DenoiseParams& params);
TriangleMesh denoise_mesh(const TriangleMesh& mesh, const Cascade& cascade, const DenoiseParams& params);

/// Per-patch parameters implied by a model (k and N from its config).
DenoiseParams params_for(const GcnModel& model, DenoiseParams base);

}  // namespace gcnd
