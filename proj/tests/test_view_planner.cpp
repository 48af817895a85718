/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/fixture.hpp"
#include "citytex/view_planner.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <filesystem>

using namespace citytex;

TEST_SUITE_BEGIN("view_planner");

TEST_CASE("plan contains one pose per position-region pair") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 5, 4, 0.35, 64, 64, 90.0, 17);
  CHECK(plan.pivots.size() == 20);
  CHECK(plan.pivot_positions.size() == 5);
  CHECK(plan.region_centroids.size() == 4);

  const ViewPlan minimal = plan_pivot_views(city.scene, 1, 1, 0.35, 64, 64, 90.0, 17);
  CHECK(minimal.pivots.size() == 1);
  CHECK(minimal.pivots[0].look_at.isApprox(minimal.region_centroids[0]));
}

TEST_CASE("pivot positions sit strictly outside the bounding box") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 7, 3, 0.35, 64, 64, 90.0, 17);
  const Aabb& box = city.scene.aabb;
  for (const Vec3& p : plan.pivot_positions) {
    const bool inside = (p.array() >= box.min.array()).all() &&
                        (p.array() <= box.max.array()).all();
    CHECK(!inside);
  }
}

TEST_CASE("region subdivision with r=1 returns the area-weighted centroid") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const std::vector<Vec3> centroids = subdivide_regions(city.scene.mesh, 1);
  Vec3 expected = Vec3::Zero();
  real total = 0.0;
  for (int f = 0; f < city.scene.mesh.face_count(); ++f) {
    const real a = city.scene.mesh.face_area(f);
    expected += city.scene.mesh.face_centroid(f) * a;
    total += a;
  }
  expected /= total;
  CHECK(centroids.size() == 1);
  CHECK(centroids[0].isApprox(expected, 1e-9));
}

TEST_CASE("well separated clusters are recovered exactly") {
  TriangleMesh mesh;
  auto add_quad = [&mesh](const Vec3& origin) {
    const int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(origin);
    mesh.vertices.push_back(origin + Vec3(1, 0, 0));
    mesh.vertices.push_back(origin + Vec3(1, 0, 1));
    mesh.vertices.push_back(origin + Vec3(0, 0, 1));
    mesh.faces.push_back({base, base + 1, base + 2});
    mesh.faces.push_back({base, base + 2, base + 3});
    mesh.uv.push_back({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)});
    mesh.uv.push_back({Vec2(0, 0), Vec2(1, 1), Vec2(0, 1)});
  };
  add_quad({0, 0, 0});
  add_quad({10, 0, 0});
  const std::vector<Vec3> centroids = subdivide_regions(mesh, 2);
  REQUIRE(centroids.size() == 2);
  std::vector<Vec3> sorted = centroids;
  std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) { return a.x() < b.x(); });
  CHECK(sorted[0].isApprox(Vec3(0.5, 0, 0.5), 1e-9));
  CHECK(sorted[1].isApprox(Vec3(10.5, 0, 0.5), 1e-9));
}

TEST_CASE("every face lands in exactly one region with bounded area skew") {
  const CubeCity city = make_cube_city({3, 64, 512, 1});
  std::vector<int> face_region;
  std::vector<real> region_area;
  const std::vector<Vec3> centroids =
      subdivide_regions(city.scene.mesh, 9, 17, &face_region, &region_area);
  CHECK(centroids.size() == 9);
  REQUIRE(face_region.size() == static_cast<std::size_t>(city.scene.mesh.face_count()));
  for (const int r : face_region) {
    CHECK(r >= 0);
    CHECK(r < 9);
  }
  real total = 0.0;
  for (const real a : region_area) total += a;
  CHECK(total == doctest::Approx(city.scene.mesh.total_area()).epsilon(1e-9));
  const real mean = total / 9.0;
  for (const real a : region_area) CHECK(a <= 3.0 * mean);
}

TEST_CASE("subdivision rejects impossible region counts") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  CHECK_THROWS_AS(subdivide_regions(city.scene.mesh, 0), Error);
  CHECK_THROWS_AS(subdivide_regions(city.scene.mesh, city.scene.mesh.face_count() + 1), Error);
}

TEST_CASE("fov schedule interpolates linearly and stays nonincreasing") {
  ProgressiveSchedule s = ProgressiveSchedule::defaults(5);
  const real expected[5] = {90.0, 72.5, 55.0, 37.5, 20.0};
  for (int l = 0; l < 5; ++l) CHECK(schedule_fov(l, s) == doctest::Approx(expected[l]));
  for (int l = 1; l < 5; ++l) CHECK(schedule_fov(l, s) <= schedule_fov(l - 1, s));

  ProgressiveSchedule one = ProgressiveSchedule::defaults(1);
  CHECK(schedule_fov(0, one) == doctest::Approx(90.0));

  ProgressiveSchedule two = ProgressiveSchedule::defaults(2);
  two.fov_start_deg = 60.0;
  two.fov_end_deg = 30.0;
  CHECK(schedule_fov(0, two) == doctest::Approx(60.0));
  CHECK(schedule_fov(1, two) == doctest::Approx(30.0));

  CHECK_THROWS_AS(schedule_fov(5, s), Error);
  CHECK_THROWS_AS(schedule_fov(-1, s), Error);
}

TEST_CASE("novel view with a single pivot and zero alpha stays on the pivot") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 1, 1, 0.35, 64, 64, 90.0, 17);
  ProgressiveSchedule s = ProgressiveSchedule::defaults(2, 4);
  s.alpha = 0.0;
  Rng rng(1);
  const CameraPose pose = sample_novel_view(plan, 0, s, city.scene.aabb.center(), rng);
  CHECK(pose.position.isApprox(plan.pivots[0].position, 1e-12));
  CHECK(pose.fov_deg == doctest::Approx(90.0));
}

TEST_CASE("translation components stay within alpha times the camera distance") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 1, 1, 0.35, 64, 64, 90.0, 17);
  ProgressiveSchedule s = ProgressiveSchedule::defaults(2, 4);
  s.alpha = 0.25;
  const Vec3 center = city.scene.aabb.center();
  const Vec3 b0 = plan.pivots[0].position;
  const real dist = (b0 - center).norm();
  Rng rng(2);
  for (int i = 0; i < 64; ++i) {
    const CameraPose pose = sample_novel_view(plan, 0, s, center, rng);
    // With one pivot the Bezier collapses to b0 and the offset is pure
    // in-plane translation.
    CameraPose at_pivot = plan.pivots[0];
    const CameraFrame frame = camera_frame(at_pivot);
    const Vec3 delta = pose.position - b0;
    CHECK(std::abs(delta.dot(frame.right)) <= s.alpha * dist + 1e-9);
    CHECK(std::abs(delta.dot(frame.up)) <= s.alpha * dist + 1e-9);
    CHECK(std::abs(delta.dot(frame.forward)) <= 1e-9);
  }
}

TEST_CASE("the viewing target stays at the center of the sampled frustum") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 5, 3, 0.35, 64, 64, 90.0, 17);
  ProgressiveSchedule s = ProgressiveSchedule::defaults(3, 4);
  Rng rng(7);
  for (int i = 0; i < 32; ++i) {
    const int level = static_cast<int>(rng.uniform_index(3));
    const CameraPose pose = sample_novel_view(plan, level, s, city.scene.aabb.center(), rng);
    CHECK(pose.fov_deg == doctest::Approx(schedule_fov(level, s)));
    real sx, sy, depth;
    REQUIRE(project_point(pose, pose.look_at, &sx, &sy, &depth));
    CHECK(sx == doctest::Approx(pose.width * 0.5).epsilon(1e-9));
    CHECK(sy == doctest::Approx(pose.height * 0.5).epsilon(1e-9));
  }
}

TEST_CASE("seeded sampling is bit-reproducible") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 5, 3, 0.35, 64, 64, 90.0, 17);
  const ProgressiveSchedule s = ProgressiveSchedule::defaults(3, 4);
  Rng rng_a(123), rng_b(123);
  for (int i = 0; i < 16; ++i) {
    const CameraPose a = sample_novel_view(plan, i % 3, s, city.scene.aabb.center(), rng_a);
    const CameraPose b = sample_novel_view(plan, i % 3, s, city.scene.aabb.center(), rng_b);
    CHECK(a.position == b.position);
    CHECK(a.look_at == b.look_at);
    CHECK(a.fov_deg == b.fov_deg);
  }
}

TEST_CASE("plan export and import round-trips") {
  const CubeCity city = make_cube_city({2, 64, 512, 1});
  const ViewPlan plan = plan_pivot_views(city.scene, 5, 3, 0.35, 64, 64, 90.0, 17);
  const ProgressiveSchedule s = ProgressiveSchedule::defaults(3, 4);
  const auto path = std::filesystem::temp_directory_path() / "citytex_plan.json";
  save_view_plan(path.string(), plan, s);
  const auto [plan2, s2] = load_view_plan(path.string());
  CHECK(plan2.pivots.size() == plan.pivots.size());
  for (std::size_t i = 0; i < plan.pivots.size(); ++i) {
    CHECK(plan2.pivots[i].position == plan.pivots[i].position);
    CHECK(plan2.pivots[i].look_at == plan.pivots[i].look_at);
  }
  CHECK(s2.views_per_level == s.views_per_level);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
