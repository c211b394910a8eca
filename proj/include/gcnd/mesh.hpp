#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace gcnd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int, 3>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FaceGeometry {
  Vec3 normal = Vec3::Zero();
  Vec3 centroid = Vec3::Zero();
  double area = 0.0;
  bool degenerate = false;  // zero area; normal is left at zero
};

// Compressed row storage for variable-length index lists.
struct IndexLists {
  std::vector<int> offsets{0};
  std::vector<int> items;

  std::span<const int> operator[](std::size_t i) const {
    return {items.data() + offsets[i], items.data() + offsets[i + 1]};
  }
  std::size_t size() const { return offsets.size() - 1; }
};

// Connectivity of a triangle mesh. Shared (immutably) by every mesh that
// differs only in vertex positions.
struct Adjacency {
  std::vector<Face> faces;
  std::vector<std::array<int, 2>> edges;  // unique undirected edges, a < b
  IndexLists face_neighbors;              // shared-edge neighbors
  IndexLists vertex_faces;                // faces incident to each vertex
  IndexLists vertex_ring;                 // faces sharing >= 1 vertex, self included
  std::size_t vertex_count = 0;
};

class TriangleMesh {
 public:
  TriangleMesh() = default;

  /// Validates indices, degenerate faces and edge manifoldness; throws MeshError.
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  /// Same connectivity with new vertex positions.
  TriangleMesh with_vertices(std::vector<Vec3> vertices) const;

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return topology_->faces; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return topology_ ? topology_->faces.size() : 0; }

  const Adjacency& adjacency() const { return *topology_; }
  const std::vector<FaceGeometry>& geometry() const { return geometry_; }

  std::span<const int> edge_neighbors(int face) const { return topology_->face_neighbors[face]; }
  std::span<const int> faces_of_vertex(int vertex) const { return topology_->vertex_faces[vertex]; }
  std::span<const int> vertex_ring(int face) const { return topology_->vertex_ring[face]; }

  /// Number of shared-edge neighbors in the full mesh (0..3).
  int one_ring_count(int face) const { return static_cast<int>(edge_neighbors(face).size()); }

  bool same_connectivity(const TriangleMesh& other) const;

 private:
  std::vector<Vec3> vertices_;
  std::shared_ptr<const Adjacency> topology_;
  std::vector<FaceGeometry> geometry_;
};

TriangleMesh load_obj(const std::filesystem::path& path);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

std::vector<FaceGeometry> face_geometry(std::span<const Vec3> vertices, std::span<const Face> faces);
inline std::vector<FaceGeometry> face_geometry(const TriangleMesh& mesh) {
  return face_geometry(mesh.vertices(), mesh.faces());
}

double mean_edge_length(const TriangleMesh& mesh);

/// Faces reached by two rounds of vertex-sharing expansion from `face`, seed included.
std::vector<int> two_ring(const TriangleMesh& mesh, int face);
double two_ring_avg_area(const TriangleMesh& mesh, int face);

/// Mean centroid distance over all shared-edge face pairs.
double mean_centroid_distance(const TriangleMesh& mesh);

double bounding_box_diagonal(const TriangleMesh& mesh);

/// Applies x -> rotation * x + translation to every vertex.
TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation = Vec3::Zero());

}  // namespace gcnd
