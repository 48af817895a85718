/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/camera.hpp"
#include "citytex/mesh.hpp"
#include "citytex/scene.hpp"

#include <string>
#include <vector>

namespace citytex {

// Pivot cameras: every sampled bounding-box position paired with every
// mesh sub-region centroid as a viewing target.
struct ViewPlan {
  std::vector<CameraPose> pivots;          // size = P * r
  std::vector<Vec3> pivot_positions;       // size = P
  std::vector<Vec3> region_centroids;      // size = r
  // Region index of each pivot (pivots[i] looks at region_centroids[region_of[i]]).
  std::vector<int> region_of;

  void validate() const;
};

// Coarse-to-fine zoom schedule: level 0 renders at fov_start_deg and later
// levels narrow linearly to fov_end_deg while sampling more views.
struct ProgressiveSchedule {
  int levels = 5;
  real fov_start_deg = 90.0;
  real fov_end_deg = 20.0;
  std::vector<int> views_per_level;  // nondecreasing, size = levels
  real alpha = 0.25;                 // translation fraction of camera distance

  static ProgressiveSchedule defaults(int levels = 5, int views_base = 64);
  void validate() const;
};

// Area-weighted k-means over face centroids; deterministic for a fixed seed.
// The returned centroids are the per-cluster area-weighted means. Optionally
// reports the face-to-region assignment and per-region areas.
std::vector<Vec3> subdivide_regions(const TriangleMesh& mesh, int r, std::uint64_t seed = 17,
                                    std::vector<int>* face_region = nullptr,
                                    std::vector<real>* region_area = nullptr);

// P positions on the top and four side faces of the scene bounding box,
// pushed outward by offset_fraction * diagonal, each paired with r region
// centroids as viewing targets.
ViewPlan plan_pivot_views(const TexturedScene& scene, int P, int r, real offset_fraction = 0.35,
                          int render_width = 512, int render_height = 512,
                          real fov_deg = 90.0, std::uint64_t seed = 17);

// Linear interpolation from fov_start at level 0 to fov_end at level N-1.
real schedule_fov(int level, const ProgressiveSchedule& schedule);

// Quadratic Bezier sample across a pivot and its two nearest same-region
// neighbours, followed by a random in-plane translation of at most
// alpha * distance-to-scene-center along the camera right/up axes.
CameraPose sample_novel_view(const ViewPlan& plan, int level, const ProgressiveSchedule& schedule,
                             const Vec3& scene_center, Rng& rng);

void save_view_plan(const std::string& path, const ViewPlan& plan,
                    const ProgressiveSchedule& schedule);
std::pair<ViewPlan, ProgressiveSchedule> load_view_plan(const std::string& path);

}  // namespace citytex
