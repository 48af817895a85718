/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/mesh.hpp"

#include <fmt/format.h>

#include <limits>

namespace citytex {

void TriangleMesh::validate() const {
  if (faces.empty()) throw Error::validation("mesh has no faces");
  if (uv.size() != faces.size())
    throw Error::validation(fmt::format("mesh has {} faces but {} uv entries (missing UVs)",
                                        faces.size(), uv.size()));
  const int n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int vi = faces[f][k];
      if (vi < 0 || vi >= n)
        throw Error::validation(
            fmt::format("face {} references vertex {} out of range [0,{})", f, vi, n));
      const Vec2& t = uv[f][k];
      constexpr real eps = 1e-9;
      if (t.x() < -eps || t.x() > 1.0 + eps || t.y() < -eps || t.y() > 1.0 + eps)
        throw Error::validation(
            fmt::format("face {} corner {} uv ({}, {}) outside [0,1]^2", f, k, t.x(), t.y()));
    }
  }
}

Aabb TriangleMesh::compute_aabb() const {
  Aabb box;
  box.min = Vec3::Constant(std::numeric_limits<real>::max());
  box.max = Vec3::Constant(std::numeric_limits<real>::lowest());
  for (const Vec3& v : vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  if (vertices.empty()) box = Aabb{};
  return box;
}

real TriangleMesh::face_area(int f) const {
  const Vec3& a = vertices[faces[f][0]];
  const Vec3& b = vertices[faces[f][1]];
  const Vec3& c = vertices[faces[f][2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 TriangleMesh::face_centroid(int f) const {
  return (vertices[faces[f][0]] + vertices[faces[f][1]] + vertices[faces[f][2]]) / 3.0;
}

real TriangleMesh::total_area() const {
  real acc = 0.0;
  for (int f = 0; f < face_count(); ++f) acc += face_area(f);
  return acc;
}

}  // namespace citytex
