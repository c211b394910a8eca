#include "gcnd/patch_graph.hpp"

#include "gcnd/binary_io.hpp"
#include "gcnd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace gcnd {

int PatchGraph::valid_count() const {
  return static_cast<int>(std::count_if(face_ids.begin(), face_ids.end(), [](int f) { return f >= 0; }));
}

std::pair<std::vector<PatchFace>, double> normalize_patch(std::span<const PatchFace> faces, std::size_t center) {
  if (faces.empty()) throw std::invalid_argument("normalize_patch: empty patch");
  const Vec3 origin = faces[center].centroid;
  std::vector<PatchFace> out(faces.begin(), faces.end());
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (PatchFace& f : out) {
    f.centroid -= origin;
    lo = lo.cwiseMin(f.centroid);
    hi = hi.cwiseMax(f.centroid);
  }
  const double extent = (hi - lo).maxCoeff();
  const double scale = extent > 0.0 ? 1.0 / extent : 1.0;
  if (scale != 1.0) {
    for (PatchFace& f : out) {
      f.centroid *= scale;
      f.area *= scale * scale;
    }
  }
  return {std::move(out), scale};
}

std::vector<PatchFace> align_patch(std::span<const PatchFace> faces, const Mat3& rotation) {
  if (!(rotation.transpose() * rotation).isApprox(Mat3::Identity(), 1e-9)) {
    throw std::invalid_argument("align_patch: rotation is not orthonormal");
  }
  const Mat3 inverse = rotation.transpose();
  std::vector<PatchFace> out(faces.begin(), faces.end());
  for (PatchFace& f : out) {
    f.centroid = inverse * f.centroid;
    f.normal = inverse * f.normal;
  }
  return out;
}

PatchBuilder::PatchBuilder(const TriangleMesh& mesh)
    : mesh_(&mesh), two_ring_area_(mesh.face_count()), grid_(mesh.vertices(), 2.0 * mean_edge_length(mesh)) {
  for (std::size_t f = 0; f < mesh.face_count(); ++f) two_ring_area_[f] = two_ring_avg_area(mesh, static_cast<int>(f));
}

double PatchBuilder::radius(int face, double k) const { return k * std::sqrt(two_ring_area_[face]); }

std::vector<int> PatchBuilder::select(int face, double k) const {
  if (face < 0 || static_cast<std::size_t>(face) >= mesh_->face_count()) {
    throw std::out_of_range("face index " + std::to_string(face) + " out of range");
  }
  if (!(k > 0.0)) throw std::invalid_argument("patch scale k must be positive");
  const Vec3& c = mesh_->geometry()[face].centroid;
  std::vector<int> out{face};
  for (int v : grid_.within(c, radius(face, k))) {
    const auto incident = mesh_->faces_of_vertex(v);
    out.insert(out.end(), incident.begin(), incident.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SpectralBasis PatchBuilder::basis_of(int face, std::span<const int> patch, double radius) const {
  const auto& geo = mesh_->geometry();
  const Vec3& c = geo[face].centroid;
  std::vector<PatchFace> voters;
  voters.reserve(patch.size());
  Vec3 moment = Vec3::Zero();
  Vec3 mean_normal = Vec3::Zero();
  for (int f : patch) {
    if (geo[f].degenerate) continue;
    voters.push_back({geo[f].normal, geo[f].centroid - c, geo[f].area});
    moment += geo[f].area * (geo[f].centroid - c);
    mean_normal += geo[f].area * geo[f].normal;
  }
  if (voters.empty()) return {};
  const Vec3 reference = geo[face].degenerate ? mean_normal : geo[face].normal;
  const double sigma = radius / 3.0;
  return spectral_decompose(voting_tensor(voters, Vec3::Zero(), sigma > 0.0 ? sigma : 1.0), reference, moment);
}

SpectralBasis PatchBuilder::basis(int face, double k) const {
  const auto patch = select(face, k);
  return basis_of(face, patch, radius(face, k));
}

PatchGraph PatchBuilder::build(int face, double k, int node_budget, std::uint64_t seed) const {
  if (node_budget < 1) throw std::invalid_argument("node budget must be positive");
  const auto patch = select(face, k);
  const auto& geo = mesh_->geometry();
  const Vec3& c = geo[face].centroid;

  // center first, then by distance with seeded random tie-break
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(face)));
  std::vector<std::tuple<double, std::uint64_t, int>> order;
  order.reserve(patch.size());
  for (int f : patch) {
    if (f == face) continue;
    order.emplace_back((geo[f].centroid - c).norm(), rng.next_u64(), f);
  }
  std::sort(order.begin(), order.end());
  std::vector<int> kept{face};
  for (const auto& entry : order) {
    if (static_cast<int>(kept.size()) >= node_budget) break;
    kept.push_back(std::get<2>(entry));
  }

  const SpectralBasis frame = basis_of(face, patch, radius(face, k));
  const Mat3 rotation = alignment_rotation(frame);

  std::vector<PatchFace> local;
  local.reserve(kept.size());
  for (int f : kept) local.push_back({geo[f].normal, geo[f].centroid - c, geo[f].area});
  auto [normalized, scale] = normalize_patch(align_patch(local, rotation), 0);

  PatchGraph g;
  g.node_count = node_budget;
  g.center = 0;
  g.rotation = rotation;
  g.scale = scale;
  g.eigenvalues = frame.values;
  g.attrs.assign(static_cast<std::size_t>(node_budget) * kNodeFeatures, 0.0);
  g.face_ids.assign(node_budget, -1);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    double* row = g.attrs.data() + i * kNodeFeatures;
    const PatchFace& pf = normalized[i];
    for (int a = 0; a < 3; ++a) {
      row[a] = pf.centroid[a];
      row[3 + a] = pf.normal[a];
    }
    row[6] = pf.area;
    row[7] = mesh_->one_ring_count(kept[i]);
    g.face_ids[i] = kept[i];
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (int nb : mesh_->edge_neighbors(kept[i])) {
      const auto it = std::find(kept.begin(), kept.end(), nb);
      if (it == kept.end()) continue;
      const int j = static_cast<int>(it - kept.begin());
      if (j > static_cast<int>(i)) g.edges.push_back({static_cast<int>(i), j});
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

std::vector<int> select_patch(const TriangleMesh& mesh, int face, double k) { return PatchBuilder(mesh).select(face, k); }

PatchGraph build_graph(const TriangleMesh& mesh, int face, double k, int node_budget, std::uint64_t seed) {
  return PatchBuilder(mesh).build(face, k, node_budget, seed);
}

std::vector<FacetClass> classify_faces(const TriangleMesh& mesh, double k) {
  const PatchBuilder builder(mesh);
  std::vector<FacetClass> out(mesh.face_count(), FacetClass::Transitional);
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Vec3 values = builder.basis(static_cast<int>(f), k).values;
    if (!(values[0] > 0.0)) continue;  // every face of the patch degenerate
    Vec3 normalized = values / values[0];
    normalized = normalized.cwiseMax(0.0);
    out[f] = classify_facet(normalized);
  }
  return out;
}

void write_patch_cache(const std::filesystem::path& path, const PatchCache& cache) {
  using namespace binary;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  put_magic(out, "GCNP");
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(cache.node_budget));
  put_f64(out, cache.k);
  put_u64(out, cache.graphs.size());
  for (const PatchGraph& g : cache.graphs) {
    if (g.node_count != cache.node_budget) throw std::invalid_argument("patch cache: node count mismatch");
    for (double a : g.attrs) put_f64(out, a);
    put_u32(out, static_cast<std::uint32_t>(g.edges.size()));
    for (const auto& e : g.edges) {
      put_u32(out, static_cast<std::uint32_t>(e[0]));
      put_u32(out, static_cast<std::uint32_t>(e[1]));
    }
    put_u32(out, static_cast<std::uint32_t>(g.center));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) put_f64(out, g.rotation(r, c));
    put_f64(out, g.scale);
    for (int id : g.face_ids) put_i32(out, id);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

PatchCache read_patch_cache(const std::filesystem::path& path) {
  using namespace binary;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  expect_magic(in, "GCNP", "patch cache");
  if (get_u32(in) != 1) throw std::runtime_error("unsupported patch cache version");
  PatchCache cache;
  cache.node_budget = static_cast<int>(get_u32(in));
  cache.k = get_f64(in);
  const std::uint64_t count = get_u64(in);
  cache.graphs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    PatchGraph g;
    g.node_count = cache.node_budget;
    g.attrs.resize(static_cast<std::size_t>(g.node_count) * kNodeFeatures);
    for (double& a : g.attrs) a = get_f64(in);
    const std::uint32_t edges = get_u32(in);
    g.edges.resize(edges);
    for (auto& e : g.edges) {
      e[0] = static_cast<int>(get_u32(in));
      e[1] = static_cast<int>(get_u32(in));
    }
    g.center = static_cast<int>(get_u32(in));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) g.rotation(r, c) = get_f64(in);
    g.scale = get_f64(in);
    g.face_ids.resize(g.node_count);
    for (int& id : g.face_ids) id = get_i32(in);
    cache.graphs.push_back(std::move(g));
  }
  return cache;
}

}  // namespace gcnd
