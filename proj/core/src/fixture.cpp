/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/fixture.hpp"

#include "citytex/image_io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace citytex {

namespace {

struct Quad {
  std::array<Vec3, 4> corners;  // counter-clockwise seen from outside
  int cls;
};

struct AtlasBuilder {
  TriangleMesh mesh;
  std::vector<int> face_class;
  std::vector<Quad> quads;

  void add_quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int cls) {
    quads.push_back({{a, b, c, d}, cls});
  }

  void add_box(const Vec3& lo, const Vec3& hi, int side_cls_a, int side_cls_b, int top_cls) {
    // Four sides (alternating classes on opposite walls) plus the roof.
    add_quad({lo.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), lo.z()}, {hi.x(), hi.y(), lo.z()},
             {lo.x(), hi.y(), lo.z()}, side_cls_a);
    add_quad({hi.x(), lo.y(), hi.z()}, {lo.x(), lo.y(), hi.z()}, {lo.x(), hi.y(), hi.z()},
             {hi.x(), hi.y(), hi.z()}, side_cls_a);
    add_quad({hi.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), hi.z()}, {hi.x(), hi.y(), hi.z()},
             {hi.x(), hi.y(), lo.z()}, side_cls_b);
    add_quad({lo.x(), lo.y(), hi.z()}, {lo.x(), lo.y(), lo.z()}, {lo.x(), hi.y(), lo.z()},
             {lo.x(), hi.y(), hi.z()}, side_cls_b);
    add_quad({lo.x(), hi.y(), lo.z()}, {hi.x(), hi.y(), lo.z()}, {hi.x(), hi.y(), hi.z()},
             {lo.x(), hi.y(), hi.z()}, top_cls);
  }

  // Lays quads out on a square atlas grid, one padded chart per quad.
  void finalize() {
    const int n_quads = static_cast<int>(quads.size());
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<real>(n_quads))));
    constexpr real kPad = 0.08;  // fraction of a chart left as margin

    for (int q = 0; q < n_quads; ++q) {
      const Quad& quad = quads[q];
      const int gx = q % grid;
      const int gy = q / grid;
      // Chart rectangle in mesh uv space (v up).
      const real u0 = (gx + kPad) / grid;
      const real u1 = (gx + 1.0 - kPad) / grid;
      const real v0 = (gy + kPad) / grid;
      const real v1 = (gy + 1.0 - kPad) / grid;

      const int base = static_cast<int>(mesh.vertices.size());
      for (const Vec3& p : quad.corners) mesh.vertices.push_back(p);
      const std::array<Vec2, 4> uv = {Vec2(u0, v0), Vec2(u1, v0), Vec2(u1, v1), Vec2(u0, v1)};

      mesh.faces.push_back({base + 0, base + 1, base + 2});
      mesh.uv.push_back({uv[0], uv[1], uv[2]});
      face_class.push_back(quad.cls);
      mesh.faces.push_back({base + 0, base + 2, base + 3});
      mesh.uv.push_back({uv[0], uv[2], uv[3]});
      face_class.push_back(quad.cls);
    }
    mesh.material_name = "cube_city";
  }

  int atlas_grid() const {
    return static_cast<int>(std::ceil(std::sqrt(static_cast<real>(quads.size()))));
  }
};

// Smooth value noise in [-1, 1] from a seeded coarse lattice.
struct ValueNoise {
  int cells;
  std::vector<real> lattice;

  ValueNoise(int cells_in, Rng& rng) : cells(cells_in) {
    lattice.resize(static_cast<std::size_t>(cells + 1) * (cells + 1));
    for (real& v : lattice) v = rng.uniform(-1.0, 1.0);
  }

  real at(real u, real v) const {
    const real x = u * cells;
    const real y = v * cells;
    const int xi = std::min(static_cast<int>(x), cells - 1);
    const int yi = std::min(static_cast<int>(y), cells - 1);
    const real wx = x - xi;
    const real wy = y - yi;
    auto l = [&](int xx, int yy) {
      return lattice[static_cast<std::size_t>(yy) * (cells + 1) + xx];
    };
    const real top = l(xi, yi) + (l(xi + 1, yi) - l(xi, yi)) * wx;
    const real bot = l(xi, yi + 1) + (l(xi + 1, yi + 1) - l(xi, yi + 1)) * wx;
    return top + (bot - top) * wy;
  }
};

struct Rgb {
  real r, g, b;
};

Rgb class_pattern(int cls, real lu, real lv, const ValueNoise& noise, real nu, real nv) {
  const real n = 0.5 + 0.5 * noise.at(nu, nv);  // [0,1] smooth
  switch (cls) {
    case 1: {  // building: warm facade with floor stripes
      const real stripe = std::fmod(lv * 8.0, 1.0) < 0.18 ? 0.18 : 0.0;
      return {0.62 + 0.10 * n - stripe, 0.55 + 0.08 * n - stripe, 0.48 + 0.06 * n - stripe};
    }
    case 2: {  // window: glass grid with bright frames
      const bool frame = std::fmod(lu * 5.0, 1.0) < 0.16 || std::fmod(lv * 6.0, 1.0) < 0.16;
      if (frame) return {0.75, 0.73, 0.70};
      return {0.10 + 0.08 * n, 0.16 + 0.10 * n, 0.30 + 0.12 * n};
    }
    case 3: {  // road: asphalt with lane dashes
      const bool dash = std::abs(lv - 0.5) < 0.03 && std::fmod(lu * 10.0, 1.0) < 0.5;
      if (dash) return {0.80, 0.78, 0.55};
      return {0.22 + 0.06 * n, 0.22 + 0.06 * n, 0.23 + 0.06 * n};
    }
    case 4:  // person
      return {0.78, 0.55 + 0.1 * n, 0.45};
    case 5: {  // plant
      return {0.12 + 0.08 * n, 0.42 + 0.15 * n, 0.15 + 0.06 * n};
    }
    case 6:  // car
      return {0.65 + 0.1 * n, 0.10, 0.12};
    case 7: {  // water: blue with ripples
      const real ripple = 0.04 * std::sin(lu * 28.0 + lv * 6.0);
      return {0.10, 0.32 + ripple, 0.55 + 0.1 * n + ripple};
    }
    case 8:  // lights
      return {0.95, 0.85 + 0.1 * n, 0.35};
    default:  // sky (unused on geometry)
      return {0.5, 0.7, 0.9};
  }
}

}  // namespace

CubeCity make_cube_city(const FixtureOptions& options) {
  if (options.blocks < 2) throw Error::config("fixture needs at least a 2x2 block grid");
  if (options.texture_size < 64) throw Error::config("fixture texture too small");
  Rng rng(options.seed);
  const SemanticClassSet classes = SemanticClassSet::urban();
  const int kBuilding = classes.index("building");
  const int kWindow = classes.index("window");
  const int kRoad = classes.index("road");
  const int kPerson = classes.index("person");
  const int kPlant = classes.index("plant");
  const int kCar = classes.index("car");
  const int kWater = classes.index("water");
  const int kLights = classes.index("lights");

  AtlasBuilder atlas;
  const int n = options.blocks;

  // Ground plane (road), slightly larger than the block grid.
  atlas.add_quad({-0.5, 0, -0.5}, {n + 0.5, 0, -0.5}, {n + 0.5, 0, n + 0.5}, {-0.5, 0, n + 0.5},
                 kRoad);

  const int water_cell = (n / 2) * n + n / 2;  // central cell becomes a pool
  for (int bz = 0; bz < n; ++bz) {
    for (int bx = 0; bx < n; ++bx) {
      const int cell = bz * n + bx;
      const real x0 = bx + 0.22, x1 = bx + 0.78;
      const real z0 = bz + 0.22, z1 = bz + 0.78;
      if (cell == water_cell) {
        atlas.add_quad({x0, 0.02, z0}, {x1, 0.02, z0}, {x1, 0.02, z1}, {x0, 0.02, z1}, kWater);
        continue;
      }
      const real h = rng.uniform(0.8, 2.2);
      atlas.add_box({x0, 0.0, z0}, {x1, h, z1}, kWindow, kBuilding, kBuilding);
    }
  }

  // Street furniture along the outer margins.
  atlas.add_box({-0.40, 0.0, 0.30}, {-0.15, 0.18, 0.55}, kCar, kCar, kCar);
  atlas.add_box({-0.35, 0.0, 1.30}, {-0.20, 0.42, 1.45}, kPerson, kPerson, kPerson);
  atlas.add_box({n + 0.15, 0.0, 0.60}, {n + 0.28, 0.55, 0.73}, kLights, kLights, kLights);
  atlas.add_box({n + 0.10, 0.0, 1.60}, {n + 0.38, 0.30, 1.88}, kPlant, kPlant, kPlant);

  atlas.finalize();

  // Paint the texture atlas and the ground-truth semantic texture. Each
  // chart cell is filled edge to edge (margins included) so bilinear taps
  // near chart borders stay inside the right class.
  const int T = options.texture_size;
  const int grid = atlas.atlas_grid();
  Image texture(3, T, T);
  LabelImage semantics(T, T);
  Rng noise_rng(options.seed ^ 0xABCDEF);
  const ValueNoise noise(24, noise_rng);

  for (int y = 0; y < T; ++y) {
    const real v_img = (y + 0.5) / T;
    const real v_mesh = 1.0 - v_img;
    for (int x = 0; x < T; ++x) {
      const real u = (x + 0.5) / T;
      int gx = std::min(static_cast<int>(u * grid), grid - 1);
      int gy = std::min(static_cast<int>(v_mesh * grid), grid - 1);
      const int q = gy * grid + gx;
      const int cls = q < static_cast<int>(atlas.quads.size()) ? atlas.quads[q].cls : kRoad;
      const real lu = u * grid - gx;
      const real lv = v_mesh * grid - gy;
      const Rgb px = class_pattern(cls, lu, lv, noise, u, v_img);
      texture.at(0, y, x) = std::clamp<real>(px.r, 0.0, 1.0);
      texture.at(1, y, x) = std::clamp<real>(px.g, 0.0, 1.0);
      texture.at(2, y, x) = std::clamp<real>(px.b, 0.0, 1.0);
      semantics.at(y, x) = static_cast<std::int16_t>(cls);
    }
  }

  CubeCity city;
  city.scene.mesh = std::move(atlas.mesh);
  city.scene.texture = std::move(texture);
  city.scene.semantics = std::move(semantics);
  city.scene.aabb = city.scene.mesh.compute_aabb();
  city.scene.validate();
  city.face_class = std::move(atlas.face_class);

  // Bundled style reference: a sunset skyline with lit windows. High
  // contrast against the daytime fixture texture by construction.
  const int S = options.style_size;
  Image style_img(3, S, S);
  LabelImage style_seg(S, S);
  const int kSky = classes.index("sky");
  Rng srng(options.seed ^ 0x57F1E);
  std::vector<real> skyline(S);
  {
    const int towers = 7;
    for (int t = 0; t < towers; ++t) {
      const int x0 = t * S / towers;
      const int x1 = (t + 1) * S / towers;
      const real h = srng.uniform(0.35, 0.75);
      for (int x = x0; x < x1 && x < S; ++x) skyline[x] = h;
    }
  }
  for (int y = 0; y < S; ++y) {
    const real v = (y + 0.5) / S;
    for (int x = 0; x < S; ++x) {
      const real u = (x + 0.5) / S;
      const real horizon = 1.0 - skyline[x];
      real r, g, b;
      int cls;
      if (v > 0.92) {  // road strip at the bottom
        cls = kRoad;
        r = 0.15;
        g = 0.08;
        b = 0.12;
      } else if (v >= horizon) {  // building silhouette
        const bool lit = std::fmod(u * 40.0, 1.0) < 0.45 && std::fmod(v * 52.0, 1.0) < 0.4;
        if (lit) {
          cls = kWindow;
          r = 1.0;
          g = 0.78;
          b = 0.25;
        } else {
          cls = kBuilding;
          r = 0.07;
          g = 0.05;
          b = 0.12;
        }
      } else {  // sunset gradient sky with a sun disk
        cls = kSky;
        const real t = v / std::max<real>(horizon, 1e-6);
        r = 0.95 - 0.55 * t;
        g = 0.45 - 0.25 * t;
        b = 0.25 + 0.45 * t;
        const real dx = u - 0.7, dy = v - 0.25;
        if (dx * dx + dy * dy < 0.006) {
          r = 1.0;
          g = 0.92;
          b = 0.65;
        }
      }
      style_img.at(0, y, x) = std::clamp<real>(r, 0.0, 1.0);
      style_img.at(1, y, x) = std::clamp<real>(g, 0.0, 1.0);
      style_img.at(2, y, x) = std::clamp<real>(b, 0.0, 1.0);
      style_seg.at(y, x) = static_cast<std::int16_t>(cls);
    }
  }

  city.style.image = std::move(style_img);
  city.style.segmentation = std::move(style_seg);
  city.style.source_text = "a photo of a city in the day";
  city.style.target_text = "a city skyline at golden sunset with glowing windows";
  city.style.validate();
  return city;
}

LabelImage render_face_labels(const RenderBuffers& buffers, const std::vector<int>& face_class) {
  LabelImage out(buffers.height, buffers.width);
  for (std::size_t pix = 0; pix < buffers.pixel_count(); ++pix) {
    const std::int32_t f = buffers.face[pix];
    if (f < 0) continue;
    if (f >= static_cast<std::int32_t>(face_class.size()))
      throw Error::validation("face id outside the class table");
    out.labels[pix] = static_cast<std::int16_t>(face_class[f]);
  }
  return out;
}

void save_fixture(const CubeCity& city, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const SemanticClassSet classes = SemanticClassSet::urban();
  save_scene(city.scene, directory, "city", classes);
  write_png((fs::path(directory) / "style.png").string(), city.style.image);
  write_label_png((fs::path(directory) / "style_semantics.png").string(),
                  city.style.segmentation);

  nlohmann::json doc;
  doc["format"] = "citytex-fixture";
  doc["mesh"] = "city.obj";
  doc["texture"] = "city_texture.png";
  doc["semantics"] = "city_semantics.png";
  doc["style_image"] = "style.png";
  doc["style_segmentation"] = "style_semantics.png";
  doc["style_source_text"] = city.style.source_text;
  doc["style_target_text"] = city.style.target_text;
  doc["face_class"] = city.face_class;
  std::ofstream out((fs::path(directory) / "fixture.json").string());
  if (!out) throw Error::io("cannot write fixture manifest");
  out << doc.dump(2) << "\n";
}

}  // namespace citytex
