/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/view_planner.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace citytex {

using nlohmann::json;

void ViewPlan::validate() const {
  if (pivot_positions.empty() || region_centroids.empty())
    throw Error::validation("view plan has no pivot positions or regions");
  if (pivots.size() != pivot_positions.size() * region_centroids.size())
    throw Error::validation("view plan must contain one pose per (position, region) pair");
  if (region_of.size() != pivots.size())
    throw Error::validation("view plan region index table is inconsistent");
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    const Vec3& target = region_centroids[region_of[i]];
    if ((pivots[i].look_at - target).norm() > 1e-9)
      throw Error::validation("pivot look_at does not match its region centroid");
  }
}

ProgressiveSchedule ProgressiveSchedule::defaults(int levels, int views_base) {
  ProgressiveSchedule s;
  s.levels = levels;
  s.views_per_level.resize(levels);
  for (int l = 0; l < levels; ++l) s.views_per_level[l] = views_base << l;
  return s;
}

void ProgressiveSchedule::validate() const {
  if (levels < 1) throw Error::validation("schedule needs at least one level");
  if (fov_start_deg < fov_end_deg)
    throw Error::validation("fov must not increase across levels");
  if (static_cast<int>(views_per_level.size()) != levels)
    throw Error::validation("views_per_level size must equal the level count");
  for (int l = 1; l < levels; ++l)
    if (views_per_level[l] < views_per_level[l - 1])
      throw Error::validation("views_per_level must be nondecreasing");
  if (alpha < 0.0 || alpha >= 1.0) throw Error::validation("alpha must be in [0, 1)");
}

std::vector<Vec3> subdivide_regions(const TriangleMesh& mesh, int r, std::uint64_t seed,
                                    std::vector<int>* face_region,
                                    std::vector<real>* region_area) {
  if (r < 1) throw Error::validation("region count must be >= 1");
  const int nf = mesh.face_count();
  if (nf == 0) throw Error::validation("mesh has no faces");
  if (r > nf)
    throw Error::validation(fmt::format("cannot split {} faces into {} regions", nf, r));

  std::vector<Vec3> centroids(nf);
  std::vector<real> areas(nf);
  real total_area = 0.0;
  for (int f = 0; f < nf; ++f) {
    centroids[f] = mesh.face_centroid(f);
    areas[f] = std::max<real>(mesh.face_area(f), 1e-12);
    total_area += areas[f];
  }

  // k-means++ style seeding over area weight, then Lloyd iterations with
  // area-weighted means.
  Rng rng(seed);
  std::vector<Vec3> centers;
  centers.reserve(r);
  {
    real pick = rng.uniform01() * total_area;
    int first = nf - 1;
    for (int f = 0; f < nf; ++f) {
      pick -= areas[f];
      if (pick <= 0.0) {
        first = f;
        break;
      }
    }
    centers.push_back(centroids[first]);
  }
  std::vector<real> dist2(nf);
  while (static_cast<int>(centers.size()) < r) {
    real sum = 0.0;
    for (int f = 0; f < nf; ++f) {
      real best = std::numeric_limits<real>::max();
      for (const Vec3& c : centers) best = std::min(best, (centroids[f] - c).squaredNorm());
      dist2[f] = best * areas[f];
      sum += dist2[f];
    }
    real pick = rng.uniform01() * sum;
    int chosen = nf - 1;
    for (int f = 0; f < nf; ++f) {
      pick -= dist2[f];
      if (pick <= 0.0) {
        chosen = f;
        break;
      }
    }
    centers.push_back(centroids[chosen]);
  }

  std::vector<int> assign(nf, 0);
  constexpr int kIterations = 20;
  for (int it = 0; it < kIterations; ++it) {
    for (int f = 0; f < nf; ++f) {
      real best = std::numeric_limits<real>::max();
      for (int k = 0; k < r; ++k) {
        const real d = (centroids[f] - centers[k]).squaredNorm();
        if (d < best) {
          best = d;
          assign[f] = k;
        }
      }
    }
    std::vector<Vec3> acc(r, Vec3::Zero());
    std::vector<real> w(r, 0.0);
    for (int f = 0; f < nf; ++f) {
      acc[assign[f]] += centroids[f] * areas[f];
      w[assign[f]] += areas[f];
    }
    for (int k = 0; k < r; ++k) {
      if (w[k] > 0.0) {
        centers[k] = acc[k] / w[k];
      } else {
        // Re-seed an empty cluster at the face farthest from its center.
        int far_face = 0;
        real far_d = -1.0;
        for (int f = 0; f < nf; ++f) {
          const real d = (centroids[f] - centers[assign[f]]).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far_face = f;
          }
        }
        centers[k] = centroids[far_face];
      }
    }
  }

  // Final assignment pass so reported regions match returned centers.
  std::vector<real> area_out(r, 0.0);
  for (int f = 0; f < nf; ++f) {
    real best = std::numeric_limits<real>::max();
    for (int k = 0; k < r; ++k) {
      const real d = (centroids[f] - centers[k]).squaredNorm();
      if (d < best) {
        best = d;
        assign[f] = k;
      }
    }
    area_out[assign[f]] += areas[f];
  }
  for (int k = 0; k < r; ++k) {
    Vec3 acc = Vec3::Zero();
    real w = 0.0;
    for (int f = 0; f < nf; ++f) {
      if (assign[f] == k) {
        acc += centroids[f] * areas[f];
        w += areas[f];
      }
    }
    if (w > 0.0) centers[k] = acc / w;
  }

  if (face_region) *face_region = assign;
  if (region_area) *region_area = area_out;
  return centers;
}

namespace {

// Picks an up vector that is never parallel to the view direction.
Vec3 stable_up(const Vec3& position, const Vec3& look_at) {
  const Vec3 fwd = (look_at - position).normalized();
  if (std::abs(fwd.dot(Vec3::UnitY())) > 0.99) return Vec3::UnitZ();
  return Vec3::UnitY();
}

}  // namespace

ViewPlan plan_pivot_views(const TexturedScene& scene, int P, int r, real offset_fraction,
                          int render_width, int render_height, real fov_deg,
                          std::uint64_t seed) {
  if (P < 1 || r < 1) throw Error::validation("P and r must be >= 1");
  if (scene.aabb.degenerate())
    throw Error::validation("scene bounding box is degenerate; cannot plan views");
  if (offset_fraction <= 0.0)
    throw Error::validation("offset_fraction must be positive so pivots sit outside the box");

  const Aabb& box = scene.aabb;
  const Vec3 c = box.center();
  const Vec3 e = 0.5 * box.extent();
  const real offset = offset_fraction * box.diagonal();

  // Box faces eligible for camera placement: top plus the four sides.
  struct Face {
    Vec3 center;
    Vec3 normal;
    Vec3 tangent;  // long in-face axis used to spread multiple positions
    real tangent_extent;
  };
  const std::array<Face, 5> faces = {{
      {c + Vec3(0, e.y(), 0), Vec3::UnitY(), e.x() >= e.z() ? Vec3::UnitX() : Vec3::UnitZ(),
       std::max(e.x(), e.z())},
      {c + Vec3(e.x(), 0, 0), Vec3::UnitX(), e.z() >= e.y() ? Vec3::UnitZ() : Vec3::UnitY(),
       std::max(e.z(), e.y())},
      {c - Vec3(e.x(), 0, 0), -Vec3::UnitX(), e.z() >= e.y() ? Vec3::UnitZ() : Vec3::UnitY(),
       std::max(e.z(), e.y())},
      {c + Vec3(0, 0, e.z()), Vec3::UnitZ(), e.x() >= e.y() ? Vec3::UnitX() : Vec3::UnitY(),
       std::max(e.x(), e.y())},
      {c - Vec3(0, 0, e.z()), -Vec3::UnitZ(), e.x() >= e.y() ? Vec3::UnitX() : Vec3::UnitY(),
       std::max(e.x(), e.y())},
  }};

  std::array<int, 5> counts = {0, 0, 0, 0, 0};
  for (int i = 0; i < P; ++i) ++counts[i % 5];

  ViewPlan plan;
  for (int f = 0; f < 5; ++f) {
    for (int j = 0; j < counts[f]; ++j) {
      const real t = counts[f] == 1 ? 0.5 : static_cast<real>(j + 1) / (counts[f] + 1);
      const Vec3 pos = faces[f].center + faces[f].normal * offset +
                       faces[f].tangent * ((t - 0.5) * 1.6 * faces[f].tangent_extent);
      plan.pivot_positions.push_back(pos);
    }
  }

  plan.region_centroids = subdivide_regions(scene.mesh, r, seed);

  for (const Vec3& pos : plan.pivot_positions) {
    for (std::size_t j = 0; j < plan.region_centroids.size(); ++j) {
      CameraPose pose;
      pose.position = pos;
      pose.look_at = plan.region_centroids[j];
      pose.up = stable_up(pos, pose.look_at);
      pose.fov_deg = fov_deg;
      pose.width = render_width;
      pose.height = render_height;
      pose.validate();
      plan.pivots.push_back(pose);
      plan.region_of.push_back(static_cast<int>(j));
    }
  }
  plan.validate();
  return plan;
}

real schedule_fov(int level, const ProgressiveSchedule& schedule) {
  schedule.validate();
  if (level < 0 || level >= schedule.levels)
    throw Error::validation(
        fmt::format("level {} outside schedule range [0, {})", level, schedule.levels));
  if (schedule.levels == 1) return schedule.fov_start_deg;
  const real t = static_cast<real>(level) / (schedule.levels - 1);
  return schedule.fov_start_deg + (schedule.fov_end_deg - schedule.fov_start_deg) * t;
}

CameraPose sample_novel_view(const ViewPlan& plan, int level, const ProgressiveSchedule& schedule,
                             const Vec3& scene_center, Rng& rng) {
  if (plan.pivots.empty()) throw Error::validation("view plan is empty");

  // Draw order is part of the reproducibility contract:
  // pivot index, Bezier t, horizontal offset, vertical offset.
  const std::size_t k = rng.uniform_index(plan.pivots.size());
  const CameraPose& seed_pivot = plan.pivots[k];
  const Vec3 b0 = seed_pivot.position;

  // Control points: the two nearest pivot positions looking at the same region.
  std::vector<std::pair<real, Vec3>> neighbours;
  for (std::size_t i = 0; i < plan.pivots.size(); ++i) {
    if (i == k || plan.region_of[i] != plan.region_of[k]) continue;
    neighbours.emplace_back((plan.pivots[i].position - b0).squaredNorm(),
                            plan.pivots[i].position);
  }
  std::sort(neighbours.begin(), neighbours.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const Vec3 b1 = neighbours.empty() ? b0 : neighbours[0].second;
  const Vec3 b2 = neighbours.size() < 2 ? b1 : neighbours[1].second;

  const real t = rng.uniform01();
  const real s = 1.0 - t;
  Vec3 pos = s * s * b0 + 2.0 * s * t * b1 + t * t * b2;

  const real dist_cam = (pos - scene_center).norm();
  const real du = rng.uniform(-schedule.alpha, schedule.alpha) * dist_cam;
  const real dv = rng.uniform(-schedule.alpha, schedule.alpha) * dist_cam;

  CameraPose pose = seed_pivot;
  pose.position = pos;
  pose.up = stable_up(pos, pose.look_at);
  const CameraFrame frame = camera_frame(pose);
  pose.position += frame.right * du + frame.up * dv;
  pose.up = stable_up(pose.position, pose.look_at);
  pose.fov_deg = schedule_fov(level, schedule);
  pose.validate();
  return pose;
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

}  // namespace

void save_view_plan(const std::string& path, const ViewPlan& plan,
                    const ProgressiveSchedule& schedule) {
  json doc;
  doc["format"] = "citytex-view-plan";
  doc["version"] = 1;
  for (const Vec3& p : plan.pivot_positions) doc["pivot_positions"].push_back(vec3_to_json(p));
  for (const Vec3& p : plan.region_centroids) doc["region_centroids"].push_back(vec3_to_json(p));
  for (std::size_t i = 0; i < plan.pivots.size(); ++i) {
    const CameraPose& c = plan.pivots[i];
    doc["pivots"].push_back({{"position", vec3_to_json(c.position)},
                             {"look_at", vec3_to_json(c.look_at)},
                             {"up", vec3_to_json(c.up)},
                             {"fov_deg", c.fov_deg},
                             {"width", c.width},
                             {"height", c.height},
                             {"region", plan.region_of[i]}});
  }
  doc["schedule"] = {{"levels", schedule.levels},
                     {"fov_start_deg", schedule.fov_start_deg},
                     {"fov_end_deg", schedule.fov_end_deg},
                     {"views_per_level", schedule.views_per_level},
                     {"alpha", schedule.alpha}};
  std::ofstream out(path);
  if (!out) throw Error::io("cannot write view plan: " + path);
  out << doc.dump(2) << "\n";
}

std::pair<ViewPlan, ProgressiveSchedule> load_view_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::io("cannot open view plan: " + path);
  json doc = json::parse(in, nullptr, true);
  if (doc.value("format", "") != "citytex-view-plan")
    throw Error::io("not a view plan file: " + path);

  ViewPlan plan;
  for (const auto& p : doc.at("pivot_positions")) plan.pivot_positions.push_back(vec3_from_json(p));
  for (const auto& p : doc.at("region_centroids")) plan.region_centroids.push_back(vec3_from_json(p));
  for (const auto& j : doc.at("pivots")) {
    CameraPose c;
    c.position = vec3_from_json(j.at("position"));
    c.look_at = vec3_from_json(j.at("look_at"));
    c.up = vec3_from_json(j.at("up"));
    c.fov_deg = j.at("fov_deg");
    c.width = j.at("width");
    c.height = j.at("height");
    plan.pivots.push_back(c);
    plan.region_of.push_back(j.at("region"));
  }

  ProgressiveSchedule schedule;
  const json& s = doc.at("schedule");
  schedule.levels = s.at("levels");
  schedule.fov_start_deg = s.at("fov_start_deg");
  schedule.fov_end_deg = s.at("fov_end_deg");
  schedule.views_per_level = s.at("views_per_level").get<std::vector<int>>();
  schedule.alpha = s.at("alpha");

  plan.validate();
  schedule.validate();
  return {plan, schedule};
}

}  // namespace citytex
