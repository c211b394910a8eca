#include "gcnd/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

namespace gcnd {

namespace {

IndexLists to_index_lists(const std::vector<std::vector<int>>& lists) {
  IndexLists out;
  out.offsets.reserve(lists.size() + 1);
  for (const auto& l : lists) {
    out.items.insert(out.items.end(), l.begin(), l.end());
    out.offsets.push_back(static_cast<int>(out.items.size()));
  }
  return out;
}

std::shared_ptr<const Adjacency> build_adjacency(std::vector<Face> faces, std::size_t vertex_count) {
  auto adj = std::make_shared<Adjacency>();
  adj->vertex_count = vertex_count;

  std::map<std::array<int, 2>, std::vector<int>> edge_faces;
  std::vector<std::vector<int>> vertex_faces(vertex_count);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    for (int c = 0; c < 3; ++c) {
      const int v = t[c];
      if (v < 0 || static_cast<std::size_t>(v) >= vertex_count) {
        throw MeshError("face " + std::to_string(f) + ": vertex index out of range");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw MeshError("face " + std::to_string(f) + ": degenerate face (repeated vertex index)");
    }
    for (int c = 0; c < 3; ++c) {
      const int a = t[c];
      const int b = t[(c + 1) % 3];
      auto& owners = edge_faces[{std::min(a, b), std::max(a, b)}];
      owners.push_back(static_cast<int>(f));
      if (owners.size() > 2) {
        throw MeshError("non-manifold edge (" + std::to_string(std::min(a, b) + 1) + ", " +
                        std::to_string(std::max(a, b) + 1) + ") shared by more than two faces");
      }
      vertex_faces[a].push_back(static_cast<int>(f));
    }
  }

  std::vector<std::vector<int>> neighbors(faces.size());
  adj->edges.reserve(edge_faces.size());
  for (const auto& [edge, owners] : edge_faces) {
    adj->edges.push_back(edge);
    if (owners.size() == 2 && owners[0] != owners[1]) {
      neighbors[owners[0]].push_back(owners[1]);
      neighbors[owners[1]].push_back(owners[0]);
    }
  }
  for (auto& n : neighbors) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }

  std::vector<std::vector<int>> ring(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    auto& r = ring[f];
    for (int v : faces[f]) r.insert(r.end(), vertex_faces[v].begin(), vertex_faces[v].end());
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }

  adj->face_neighbors = to_index_lists(neighbors);
  adj->vertex_faces = to_index_lists(vertex_faces);
  adj->vertex_ring = to_index_lists(ring);
  adj->faces = std::move(faces);
  return adj;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw MeshError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), topology_(build_adjacency(std::move(faces), vertices_.size())) {
  geometry_ = face_geometry(vertices_, topology_->faces);
}

TriangleMesh TriangleMesh::with_vertices(std::vector<Vec3> vertices) const {
  if (vertices.size() != vertices_.size()) throw MeshError("with_vertices: vertex count mismatch");
  TriangleMesh out;
  out.vertices_ = std::move(vertices);
  out.topology_ = topology_;
  out.geometry_ = face_geometry(out.vertices_, topology_->faces);
  return out;
}

bool TriangleMesh::same_connectivity(const TriangleMesh& other) const {
  if (vertex_count() != other.vertex_count()) return false;
  if (topology_ == other.topology_) return true;
  if (!topology_ || !other.topology_) return face_count() == other.face_count();
  return topology_->faces == other.topology_->faces;
}

std::vector<FaceGeometry> face_geometry(std::span<const Vec3> vertices, std::span<const Face> faces) {
  std::vector<FaceGeometry> out(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = vertices[faces[f][0]];
    const Vec3& b = vertices[faces[f][1]];
    const Vec3& c = vertices[faces[f][2]];
    const Vec3 cross = (b - a).cross(c - a);
    const double len = cross.norm();
    const double scale = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    FaceGeometry& g = out[f];
    g.centroid = (a + b + c) / 3.0;
    g.area = 0.5 * len;
    if (len <= 1e-14 * scale || len == 0.0) {
      g.degenerate = true;
      g.normal = Vec3::Zero();
    } else {
      g.normal = cross / len;
    }
  }
  return out;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open " + path.string());

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::size_t> face_lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto tokens = split_ws(line);
    const std::string_view tag = tokens[0];
    if (tag == "v") {
      if (tokens.size() < 4) parse_fail(line_no, "vertex record needs 3 coordinates");
      Vec3 p;
      for (int c = 0; c < 3; ++c) {
        const auto tok = tokens[c + 1];
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), p[c]);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
          parse_fail(line_no, "malformed coordinate '" + std::string(tok) + "'");
        }
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      if (tokens.size() != 4) {
        parse_fail(line_no, tokens.size() < 4 ? "face record needs 3 indices" : "non-triangular face");
      }
      Face face{};
      for (int c = 0; c < 3; ++c) {
        auto tok = tokens[c + 1];
        tok = tok.substr(0, tok.find('/'));
        long idx = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || idx == 0) {
          parse_fail(line_no, "malformed face index '" + std::string(tokens[c + 1]) + "'");
        }
        const long resolved = idx > 0 ? idx - 1 : static_cast<long>(vertices.size()) + idx;
        if (resolved < 0) parse_fail(line_no, "face index out of range");
        face[c] = static_cast<int>(resolved);
      }
      if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
        parse_fail(line_no, "degenerate face (repeated vertex index)");
      }
      faces.push_back(face);
      face_lines.push_back(line_no);
    }
    // vn, vt, g, o, s, usemtl, mtllib and anything else are ignored
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int v : faces[f]) {
      if (static_cast<std::size_t>(v) >= vertices.size()) parse_fail(face_lines[f], "face index out of range");
    }
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MeshError("cannot write " + path.string());
  char buf[64];
  for (const Vec3& v : mesh.vertices()) {
    out << 'v';
    for (int c = 0; c < 3; ++c) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[c]);
      out << ' ' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
  for (const Face& f : mesh.faces()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw MeshError("write failed for " + path.string());
}

double mean_edge_length(const TriangleMesh& mesh) {
  if (mesh.face_count() == 0) throw MeshError("mean_edge_length: empty mesh");
  const auto& edges = mesh.adjacency().edges;
  double sum = 0.0;
  for (const auto& e : edges) sum += (mesh.vertices()[e[1]] - mesh.vertices()[e[0]]).norm();
  return sum / static_cast<double>(edges.size());
}

std::vector<int> two_ring(const TriangleMesh& mesh, int face) {
  std::vector<int> ring;
  for (int f : mesh.vertex_ring(face)) {
    const auto second = mesh.vertex_ring(f);
    ring.insert(ring.end(), second.begin(), second.end());
  }
  std::sort(ring.begin(), ring.end());
  ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
  return ring;
}

double two_ring_avg_area(const TriangleMesh& mesh, int face) {
  const auto ring = two_ring(mesh, face);
  double sum = 0.0;
  for (int f : ring) sum += mesh.geometry()[f].area;
  return sum / static_cast<double>(ring.size());
}

double mean_centroid_distance(const TriangleMesh& mesh) {
  double sum = 0.0;
  std::size_t pairs = 0;
  const auto& geo = mesh.geometry();
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    for (int g : mesh.edge_neighbors(static_cast<int>(f))) {
      if (g <= static_cast<int>(f)) continue;
      sum += (geo[f].centroid - geo[g].centroid).norm();
      ++pairs;
    }
  }
  if (pairs == 0) throw MeshError("mean_centroid_distance: mesh has no adjacent face pairs");
  return sum / static_cast<double>(pairs);
}

double bounding_box_diagonal(const TriangleMesh& mesh) {
  if (mesh.vertex_count() == 0) throw MeshError("bounding_box_diagonal: empty mesh");
  Vec3 lo = mesh.vertices().front();
  Vec3 hi = lo;
  for (const Vec3& v : mesh.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation) {
  std::vector<Vec3> moved;
  moved.reserve(mesh.vertex_count());
  for (const Vec3& v : mesh.vertices()) moved.push_back(rotation * v + translation);
  return mesh.with_vertices(std::move(moved));
}

}  // namespace gcnd
