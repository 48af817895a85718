/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace citytex {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  real diagonal() const { return extent().norm(); }
  bool degenerate() const { return extent().maxCoeff() <= 0.0; }
};

// Triangulated UV-mapped mesh. UVs live on face corners (one atlas chart per
// face is allowed) and use the OBJ convention: v runs bottom-up. Texture
// images are stored top-down, so samplers flip v once at the mesh/image
// boundary (see tex_v_from_mesh_v). +Y is up throughout the project.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::array<Vec2, 3>> uv;  // one entry per face
  std::string material_name = "default";

  int face_count() const { return static_cast<int>(faces.size()); }

  // Throws Error::validation on out-of-range indices, UVs outside [0,1],
  // missing UV entries, or an empty face list.
  void validate() const;

  Aabb compute_aabb() const;
  real face_area(int f) const;
  Vec3 face_centroid(int f) const;
  real total_area() const;
};

}  // namespace citytex
