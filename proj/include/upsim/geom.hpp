// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>

namespace upsim::geom {

/// A 2D or 3D position in meters. Dimension is a runtime property (2 or 3);
/// storage is on the stack. All points in one computation must share the
/// same dimension.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

/// Barycentric coordinate vector: dims+1 entries.
using BaryVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

/// Containment requires every barycentric coordinate to be at least this
/// value: the verified point must sit strictly inside its simplex, with a
/// small band absorbing floating-point noise while still rejecting vertices
/// and edges.
inline constexpr double kBoundaryEps = 1e-9;

/// A triangle (2D) or tetrahedron (3D): dims+1 vertices stored as columns.
/// Construction does not check degeneracy; query it with is_degenerate().
struct Simplex {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 4> vertices;

  int dims() const { return static_cast<int>(vertices.rows()); }
  int vertex_count() const { return static_cast<int>(vertices.cols()); }
  Vec vertex(int i) const { return vertices.col(i); }
};

/// Builds a simplex from dims+1 points of matching dimension.
/// Throws Error on inconsistent dimensions or vertex count.
Simplex make_simplex(std::span<const Vec> verts);

inline Simplex triangle(const Vec& a, const Vec& b, const Vec& c) {
  const Vec verts[] = {a, b, c};
  return make_simplex(verts);
}

inline Simplex tetrahedron(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  const Vec verts[] = {a, b, c, d};
  return make_simplex(verts);
}

/// Signed area (2D, m^2) or signed volume (3D, m^3). The sign reflects
/// vertex orientation; swapping two vertices flips it.
double signed_measure(const Simplex& s);

/// Degeneracy threshold: 1e-6 m^2 for triangles, 1e-9 m^3 for tetrahedra.
/// Near-degenerate verification simplices make containment meaningless, so
/// they are gated out rather than evaluated.
double degeneracy_threshold(int dims);

inline bool is_degenerate(const Simplex& s) {
  return std::abs(signed_measure(s)) <= degeneracy_threshold(s.dims());
}

/// Barycentric coordinates of p with respect to s, computed as ratios of
/// signed measures (no matrix inversion). Coordinates sum to 1.
/// Throws DegenerateSimplexError when s is degenerate.
BaryVec barycentric(const Simplex& s, const Vec& p);

/// True iff p lies strictly inside s: every barycentric coordinate is
/// >= kBoundaryEps. Points on vertices or edges are excluded.
/// Throws DegenerateSimplexError when s is degenerate.
bool contains(const Simplex& s, const Vec& p);

/// Looks for a vertex of s that q is strictly closer to than p is; returns
/// the lowest such vertex index, or nullopt when every vertex distance from
/// q is >= the distance from p. For any q strictly inside s and any p != q,
/// a witness exists: no point can move to another point inside the simplex
/// without shortening its distance to some vertex.
std::optional<int> shortening_witness(const Simplex& s, const Vec& p, const Vec& q);

}  // namespace upsim::geom
