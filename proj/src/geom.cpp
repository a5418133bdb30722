// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/geom.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "upsim/errors.hpp"

namespace upsim::geom {

namespace {

double simplex_measure_checked(const Simplex& s) {
  const double m = signed_measure(s);
  if (std::abs(m) <= degeneracy_threshold(s.dims())) {
    throw DegenerateSimplexError("simplex measure below degeneracy threshold");
  }
  return m;
}

}  // namespace

Simplex make_simplex(std::span<const Vec> verts) {
  if (verts.empty()) throw Error("make_simplex: no vertices");
  const int dims = static_cast<int>(verts.front().size());
  if (dims != 2 && dims != 3) throw Error("make_simplex: dims must be 2 or 3");
  if (static_cast<int>(verts.size()) != dims + 1) {
    throw Error("make_simplex: a simplex in " + std::to_string(dims) +
                "D needs " + std::to_string(dims + 1) + " vertices");
  }
  Simplex s;
  s.vertices.resize(dims, dims + 1);
  for (int i = 0; i <= dims; ++i) {
    if (static_cast<int>(verts[i].size()) != dims) {
      throw Error("make_simplex: mixed vertex dimensions");
    }
    s.vertices.col(i) = verts[static_cast<std::size_t>(i)];
  }
  return s;
}

double signed_measure(const Simplex& s) {
  const int dims = s.dims();
  if (dims == 2) {
    Eigen::Matrix2d edges;
    edges.col(0) = s.vertices.col(1) - s.vertices.col(0);
    edges.col(1) = s.vertices.col(2) - s.vertices.col(0);
    return edges.determinant() / 2.0;
  }
  Eigen::Matrix3d edges;
  edges.col(0) = s.vertices.col(1) - s.vertices.col(0);
  edges.col(1) = s.vertices.col(2) - s.vertices.col(0);
  edges.col(2) = s.vertices.col(3) - s.vertices.col(0);
  return edges.determinant() / 6.0;
}

double degeneracy_threshold(int dims) { return dims == 2 ? 1e-6 : 1e-9; }

BaryVec barycentric(const Simplex& s, const Vec& p) {
  const double whole = simplex_measure_checked(s);
  const int n = s.vertex_count();
  BaryVec coords(n);
  for (int i = 0; i < n; ++i) {
    Simplex sub = s;
    sub.vertices.col(i) = p;
    coords[i] = signed_measure(sub) / whole;
  }
  return coords;
}

bool contains(const Simplex& s, const Vec& p) {
  return (barycentric(s, p).array() >= kBoundaryEps).all();
}

std::optional<int> shortening_witness(const Simplex& s, const Vec& p, const Vec& q) {
  for (int i = 0; i < s.vertex_count(); ++i) {
    const double dq = (q - s.vertices.col(i)).squaredNorm();
    const double dp = (p - s.vertices.col(i)).squaredNorm();
    if (dq < dp) return i;
  }
  return std::nullopt;
}

}  // namespace upsim::geom
