/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"
#include "citytex/mesh.hpp"
#include "citytex/semantics.hpp"

#include <optional>
#include <string>

namespace citytex {

// Flip between mesh uv space (v bottom-up, OBJ convention) and texture image
// space (v top-down). Applied exactly once, at every mesh-to-texture lookup.
inline real tex_v_from_mesh_v(real v) { return 1.0 - v; }

struct TexturedScene {
  TriangleMesh mesh;
  Image texture;          // 3 channels
  LabelImage semantics;   // same dims as texture; kUnlabeled where unknown
  Aabb aabb;

  void validate() const;
};

// Reads an OBJ (+MTL) or glTF mesh together with a PNG texture. A missing
// semantics path yields an all-unlabeled semantic texture.
TexturedScene load_scene(const std::string& mesh_path, const std::string& texture_path,
                         const std::optional<std::string>& semantics_path = std::nullopt);

// Writes <basename>.obj/.mtl/<basename>_texture.png plus the semantic label
// PNG and its JSON manifest. Vertex and uv coordinates are printed with
// enough digits that reloading reproduces them bit-exactly.
void save_scene(const TexturedScene& scene, const std::string& directory,
                const std::string& basename, const SemanticClassSet& classes);

TriangleMesh read_obj(const std::string& path);
void write_obj(const TriangleMesh& mesh, const std::string& obj_path,
               const std::string& mtl_path, const std::string& texture_filename);
TriangleMesh read_gltf(const std::string& path);

void write_semantic_manifest(const std::string& path, const SemanticClassSet& classes);

}  // namespace citytex
