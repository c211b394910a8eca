#include "gcnd/primitives.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace gcnd::primitives {

namespace {

// Welds coincident vertices of a triangle soup.
class SoupBuilder {
 public:
  int vertex(const Vec3& p) {
    const std::array<long long, 3> key{std::llround(p.x() * 1e9), std::llround(p.y() * 1e9),
                                       std::llround(p.z() * 1e9)};
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(vertices_.size()));
    if (inserted) vertices_.push_back(p);
    return it->second;
  }

  void triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Face f{vertex(a), vertex(b), vertex(c)};
    if (f[0] != f[1] && f[1] != f[2] && f[0] != f[2]) faces_.push_back(f);
  }

  /// Quad a-b-c-d in counter-clockwise order.
  void quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    triangle(a, b, c);
    triangle(a, c, d);
  }

  TriangleMesh build() { return TriangleMesh(std::move(vertices_), std::move(faces_)); }

 private:
  std::map<std::array<long long, 3>, int> index_;
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
};

void subdivided_triangle(SoupBuilder& soup, const Vec3& a, const Vec3& b, const Vec3& c, int n) {
  auto at = [&](int i, int j) {
    return a + (b - a) * (static_cast<double>(i) / n) + (c - a) * (static_cast<double>(j) / n);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - i; ++j) {
      soup.triangle(at(i, j), at(i + 1, j), at(i, j + 1));
      if (i + j + 1 < n) soup.triangle(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
}

// Rings of a surface of revolution plus flat caps. profile(t) gives (radius, z) for t in [0,1].
template <typename Profile>
TriangleMesh revolve(Profile profile, int segments, int rings, int cap_rings, bool bottom_cap, bool top_cap) {
  SoupBuilder soup;
  const double two_pi = 2.0 * std::numbers::pi;
  auto point = [&](double radius, double z, int s) {
    const double phi = two_pi * (s % segments) / segments;
    return Vec3(radius * std::cos(phi), radius * std::sin(phi), z);
  };
  for (int r = 0; r < rings; ++r) {
    const auto [r0, z0] = profile(static_cast<double>(r) / rings);
    const auto [r1, z1] = profile(static_cast<double>(r + 1) / rings);
    for (int s = 0; s < segments; ++s) {
      soup.quad(point(r0, z0, s), point(r0, z0, s + 1), point(r1, z1, s + 1), point(r1, z1, s));
    }
  }
  auto cap = [&](double radius, double z, bool facing_up) {
    for (int c = 0; c < cap_rings; ++c) {
      const double outer = radius * (cap_rings - c) / cap_rings;
      const double inner = radius * (cap_rings - c - 1) / cap_rings;
      for (int s = 0; s < segments; ++s) {
        const Vec3 a = point(outer, z, s);
        const Vec3 b = point(outer, z, s + 1);
        const Vec3 ci = point(inner, z, s + 1);
        const Vec3 di = point(inner, z, s);
        if (facing_up) {
          soup.quad(a, b, ci, di);
        } else {
          soup.quad(b, a, di, ci);
        }
      }
    }
  };
  const auto [rb, zb] = profile(0.0);
  const auto [rt, zt] = profile(1.0);
  if (bottom_cap && rb > 0) cap(rb, zb, false);
  if (top_cap && rt > 0) cap(rt, zt, true);
  return soup.build();
}

}  // namespace

TriangleMesh grid(int nx, int ny, double width, double height) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) vertices.emplace_back(width * i / nx, height * j / ny, 0.0);
  }
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

TriangleMesh box(const Vec3& size, const std::array<int, 3>& divisions) {
  SoupBuilder soup;
  const Vec3 half = size / 2.0;
  // each side: origin corner, two in-plane axes (u x v points outward)
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int side = -1; side <= 1; side += 2) {
      const int nu = divisions[u];
      const int nv = divisions[v];
      auto at = [&](int i, int j) {
        Vec3 p;
        p[axis] = side * half[axis];
        p[u] = -half[u] + size[u] * i / nu;
        p[v] = -half[v] + size[v] * j / nv;
        return p;
      };
      for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
          if (side > 0) {
            soup.quad(at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
          } else {
            soup.quad(at(i, j), at(i, j + 1), at(i + 1, j + 1), at(i + 1, j));
          }
        }
      }
    }
  }
  return soup.build();
}

TriangleMesh icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::array<Vec3, 12> ico{Vec3(-1, t, 0), Vec3(1, t, 0),  Vec3(-1, -t, 0), Vec3(1, -t, 0),
                                 Vec3(0, -1, t), Vec3(0, 1, t),  Vec3(0, -1, -t), Vec3(0, 1, -t),
                                 Vec3(t, 0, -1), Vec3(t, 0, 1),  Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  const std::array<Face, 20> tris{{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}}};
  SoupBuilder flat;
  const int n = 1 << subdivisions;
  for (const Face& f : tris) subdivided_triangle(flat, ico[f[0]], ico[f[1]], ico[f[2]], n);
  TriangleMesh planar = flat.build();
  std::vector<Vec3> projected = planar.vertices();
  for (Vec3& p : projected) p = p.normalized() * radius;
  return planar.with_vertices(std::move(projected));
}

TriangleMesh cylinder(double radius, double height, int segments, int rings, int cap_rings) {
  return revolve([&](double s) { return std::pair{radius, -height / 2 + height * s}; }, segments, rings, cap_rings,
                 true, true);
}

TriangleMesh cone(double radius, double height, int segments, int rings, int cap_rings) {
  // stop a little below the apex so the top ring stays non-degenerate, then close with a small cap
  return revolve([&](double s) { return std::pair{radius * (1.0 - 0.9 * s), -height / 2 + 0.9 * height * s}; },
                 segments, rings, cap_rings, true, true);
}

TriangleMesh torus(double major_radius, double minor_radius, int major_segments, int minor_segments) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < major_segments; ++i) {
    const double u = two_pi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double v = two_pi * j / minor_segments;
      const double ring = major_radius + minor_radius * std::cos(v);
      vertices.emplace_back(ring * std::cos(u), ring * std::sin(u), minor_radius * std::sin(v));
    }
  }
  auto id = [&](int i, int j) { return (i % major_segments) * minor_segments + (j % minor_segments); };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

TriangleMesh octahedron(double size, int subdivisions) {
  SoupBuilder soup;
  const std::array<Vec3, 6> p{Vec3(size, 0, 0),  Vec3(-size, 0, 0), Vec3(0, size, 0),
                              Vec3(0, -size, 0), Vec3(0, 0, size),  Vec3(0, 0, -size)};
  const std::array<Face, 8> tris{{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                  {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}}};
  for (const Face& f : tris) subdivided_triangle(soup, p[f[0]], p[f[1]], p[f[2]], subdivisions);
  return soup.build();
}

}  // namespace gcnd::primitives
