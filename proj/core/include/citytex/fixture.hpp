/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/rasterizer.hpp"
#include "citytex/scene.hpp"
#include "citytex/style_bank.hpp"

#include <string>
#include <vector>

namespace citytex {

// Procedural toy city: an NxN grid of buildings on a road plane with a
// water pool, plants, cars, a person and street lights, a synthetic texture
// atlas (one chart per quad), exact per-face class labels, and a bundled
// high-contrast style reference. Everything is deterministic in the seed.
struct FixtureOptions {
  int blocks = 3;
  int texture_size = 1024;
  int style_size = 512;
  std::uint64_t seed = 1;
};

struct CubeCity {
  TexturedScene scene;          // scene.semantics holds the ground-truth labels
  std::vector<int> face_class;  // per-triangle class index (ground truth)
  StyleReference style;
};

CubeCity make_cube_city(const FixtureOptions& options = {});

// Exact label view derived from the rasterized face ids; this is the
// reference labeling that texture-space baking is validated against.
LabelImage render_face_labels(const RenderBuffers& buffers, const std::vector<int>& face_class);

// Writes city.obj/.mtl/textures plus style.png/style_semantics.png and a
// manifest describing the files.
void save_fixture(const CubeCity& city, const std::string& directory);

}  // namespace citytex
