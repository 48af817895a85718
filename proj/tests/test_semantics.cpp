/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/fixture.hpp"
#include "citytex/rasterizer.hpp"
#include "citytex/semantics.hpp"
#include "citytex/view_planner.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <algorithm>

using namespace citytex;

namespace {

// A single quad scene filling the atlas, for controlled baking tests.
TexturedScene quad_scene(int tex_size = 64) {
  TexturedScene scene;
  scene.mesh.vertices = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
  scene.mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  scene.mesh.uv = {{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)}, {Vec2(0, 0), Vec2(1, 1), Vec2(0, 1)}};
  scene.texture = Image(3, tex_size, tex_size, 0.5);
  scene.semantics = LabelImage(tex_size, tex_size);
  scene.aabb = scene.mesh.compute_aabb();
  return scene;
}

CameraPose quad_camera(int res = 96) {
  CameraPose cam;
  cam.position = Vec3(0, 0, -2.5);
  cam.look_at = Vec3(0, 0, 0);
  cam.fov_deg = 60.0;
  cam.width = res;
  cam.height = res;
  return cam;
}

}  // namespace

TEST_SUITE_BEGIN("semantics");

TEST_CASE("hierarchy validates and exposes the expected parents") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  CHECK(classes.size() == 9);
  CHECK(classes.name(classes.root()) == "sky");
  CHECK(classes.name(*classes.parent(classes.index("window"))) == "building");
  CHECK(classes.name(*classes.parent(classes.index("car"))) == "road");
  CHECK(!classes.parent(classes.index("sky")).has_value());
}

TEST_CASE("re-matching missing classes walks up to available ancestors") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  CHECK(rematch_class("water", {"sky", "building", "window", "lights"}, classes) == "sky");
  CHECK(rematch_class("plant", {"sky", "building", "window", "road"}, classes) == "road");
  CHECK(rematch_class("car", {"sky"}, classes) == "sky");
  CHECK(rematch_class("window", {"sky", "building"}, classes) == "building");
}

TEST_CASE("re-matching fails cleanly when no ancestor is available") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  CHECK_THROWS_AS(rematch_class("car", {"window", "lights"}, classes), Error);
}

TEST_CASE("re-match result is always an ancestor of the query") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int missing = static_cast<int>(rng.uniform_index(classes.size()));
    std::vector<std::string> available;
    for (int c = 0; c < classes.size(); ++c)
      if (c != missing && rng.uniform01() < 0.5) available.push_back(classes.name(c));
    if (available.empty()) continue;
    std::string result;
    try {
      result = rematch_class(classes.name(missing), available, classes);
    } catch (const Error&) {
      continue;  // no ancestor available
    }
    CHECK(std::find(available.begin(), available.end(), result) != available.end());
    // Walk ancestors of `missing` and confirm the result is on the path.
    bool on_path = false;
    int cur = missing;
    while (auto p = classes.parent(cur)) {
      cur = *p;
      if (classes.name(cur) == result) on_path = true;
    }
    CHECK(on_path);
  }
}

TEST_CASE("a single fully labeled view paints every covered texel") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  const TexturedScene scene = quad_scene();
  const CameraPose cam = quad_camera();
  const int building = classes.index("building");
  const LabelImage view_labels(cam.height, cam.width, static_cast<std::int16_t>(building));

  const LabelImage baked = bake_semantics(scene, {{cam, view_labels}}, classes);
  int covered = 0;
  for (const auto label : baked.labels) {
    if (label == LabelImage::kUnlabeled) continue;
    ++covered;
    CHECK(label == building);
  }
  CHECK(covered > 0);
}

TEST_CASE("majority vote wins over a dissenting view") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  const TexturedScene scene = quad_scene();
  const CameraPose cam = quad_camera();
  const auto building = static_cast<std::int16_t>(classes.index("building"));
  const auto road = static_cast<std::int16_t>(classes.index("road"));

  const LabelImage b(cam.height, cam.width, building);
  const LabelImage r(cam.height, cam.width, road);
  const LabelImage baked = bake_semantics(scene, {{cam, b}, {cam, b}, {cam, r}}, classes);
  for (const auto label : baked.labels)
    if (label != LabelImage::kUnlabeled) CHECK(label == building);
}

TEST_CASE("ties break toward the smaller class index") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  const TexturedScene scene = quad_scene();
  const CameraPose cam = quad_camera();
  const auto building = static_cast<std::int16_t>(classes.index("building"));  // index 1
  const auto road = static_cast<std::int16_t>(classes.index("road"));          // index 3

  const LabelImage b(cam.height, cam.width, building);
  const LabelImage r(cam.height, cam.width, road);
  const LabelImage baked = bake_semantics(scene, {{cam, r}, {cam, b}}, classes);
  for (const auto label : baked.labels)
    if (label != LabelImage::kUnlabeled) CHECK(label == building);
}

TEST_CASE("baking is invariant to the order of the views") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  const CubeCity city = make_cube_city({2, 128, 512, 5});
  const ViewPlan plan = plan_pivot_views(city.scene, 3, 2, 0.35, 64, 64, 70.0, 11);

  std::vector<std::pair<CameraPose, LabelImage>> views;
  for (const CameraPose& cam : plan.pivots) {
    const RenderBuffers buffers = rasterize(city.scene, cam);
    views.emplace_back(cam, render_face_labels(buffers, city.face_class));
  }
  const LabelImage forward = bake_semantics(city.scene, views, classes);
  std::reverse(views.begin(), views.end());
  const LabelImage reversed = bake_semantics(city.scene, views, classes);
  CHECK(forward.labels == reversed.labels);
}

TEST_CASE("empty view lists and foreign labels are rejected") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  const TexturedScene scene = quad_scene();
  CHECK_THROWS_AS(bake_semantics(scene, {}, classes), Error);

  const CameraPose cam = quad_camera();
  const LabelImage bad(cam.height, cam.width, 42);
  CHECK_THROWS_WITH_AS(bake_semantics(scene, {{cam, bad}}, classes),
                       doctest::Contains("outside the class set"), Error);

  const LabelImage wrong_size(cam.height / 2, cam.width / 2, 1);
  CHECK_THROWS_AS(bake_semantics(scene, {{cam, wrong_size}}, classes), Error);
}

TEST_CASE("baked labels on the fixture match the per-face ground truth") {
  const SemanticClassSet classes = SemanticClassSet::urban();
  const CubeCity city = make_cube_city({2, 128, 512, 2});

  // Six oblique pivot views with exact labels derived from face ids.
  const ViewPlan plan = plan_pivot_views(city.scene, 3, 2, 0.4, 96, 96, 70.0, 4);
  std::vector<std::pair<CameraPose, LabelImage>> views;
  for (const CameraPose& cam : plan.pivots) {
    const RenderBuffers buffers = rasterize(city.scene, cam);
    views.emplace_back(cam, render_face_labels(buffers, city.face_class));
  }
  const LabelImage baked = bake_semantics(city.scene, views, classes);

  std::size_t visible = 0, correct = 0;
  for (std::size_t i = 0; i < baked.labels.size(); ++i) {
    if (baked.labels[i] == LabelImage::kUnlabeled) continue;
    ++visible;
    if (baked.labels[i] == city.scene.semantics.labels[i]) ++correct;
  }
  REQUIRE(visible > 1000);
  CHECK(static_cast<real>(correct) / visible >= 0.99);
}

TEST_SUITE_END();
