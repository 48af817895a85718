/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/rasterizer.hpp"

#include "citytex/image_io.hpp"
#include "citytex/texture_field.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace citytex {

namespace {

constexpr real kNearPlane = 1e-4;

struct ViewVertex {
  Vec3 p;   // view space: x right, y up, z forward distance
  Vec2 uv;  // mesh convention
};

// Sutherland-Hodgman clip of a triangle against the near plane (z >= near).
// Linear interpolation in view space is exact for positions and UVs.
int clip_near(const ViewVertex tri[3], ViewVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ViewVertex& a = tri[i];
    const ViewVertex& b = tri[(i + 1) % 3];
    const bool ina = a.p.z() >= kNearPlane;
    const bool inb = b.p.z() >= kNearPlane;
    if (ina) out[n++] = a;
    if (ina != inb) {
      const real t = (kNearPlane - a.p.z()) / (b.p.z() - a.p.z());
      ViewVertex v;
      v.p = a.p + (b.p - a.p) * t;
      v.uv = a.uv + (b.uv - a.uv) * t;
      out[n++] = v;
    }
  }
  return n;
}

}  // namespace

RenderBuffers rasterize(const TexturedScene& scene, const CameraPose& camera,
                        int max_resolution) {
  camera.validate();
  if (camera.width > max_resolution || camera.height > max_resolution)
    throw Error::validation(fmt::format("render resolution {}x{} exceeds the configured cap {}",
                                        camera.width, camera.height, max_resolution));

  const int W = camera.width;
  const int H = camera.height;
  RenderBuffers buffers;
  buffers.width = W;
  buffers.height = H;
  buffers.uv.assign(static_cast<std::size_t>(W) * H * 2, -1.0);
  buffers.fg.assign(static_cast<std::size_t>(W) * H, 0);
  buffers.face.assign(static_cast<std::size_t>(W) * H, -1);

  std::vector<real> zbuf(static_cast<std::size_t>(W) * H,
                         std::numeric_limits<real>::infinity());

  const CameraFrame frame = camera_frame(camera);
  const real tan_half = std::tan(deg_to_rad(camera.fov_deg) * 0.5);
  const real aspect = static_cast<real>(W) / H;

  auto to_view = [&](const Vec3& p) {
    const Vec3 d = p - camera.position;
    return Vec3(d.dot(frame.right), d.dot(frame.up), d.dot(frame.forward));
  };
  auto to_screen = [&](const Vec3& v) {
    return Vec2((v.x() / (v.z() * tan_half * aspect) + 1.0) * 0.5 * W,
                (1.0 - v.y() / (v.z() * tan_half)) * 0.5 * H);
  };

  const TriangleMesh& mesh = scene.mesh;
  for (int f = 0; f < mesh.face_count(); ++f) {
    ViewVertex tri[3];
    for (int k = 0; k < 3; ++k) {
      tri[k].p = to_view(mesh.vertices[mesh.faces[f][k]]);
      tri[k].uv = mesh.uv[f][k];
    }
    ViewVertex poly[4];
    const int n = clip_near(tri, poly);
    for (int t = 0; t < n - 2; ++t) {  // fan triangulation of the clipped polygon
      const ViewVertex& a = poly[0];
      const ViewVertex& b = poly[t + 1];
      const ViewVertex& c = poly[t + 2];
      const Vec2 sa = to_screen(a.p), sb = to_screen(b.p), sc = to_screen(c.p);

      const real area = (sb.x() - sa.x()) * (sc.y() - sa.y()) -
                        (sb.y() - sa.y()) * (sc.x() - sa.x());
      if (std::abs(area) < 1e-12) continue;

      const int x0 = std::max(0, static_cast<int>(std::floor(std::min({sa.x(), sb.x(), sc.x()}))));
      const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({sa.x(), sb.x(), sc.x()}))));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sa.y(), sb.y(), sc.y()}))));
      const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({sa.y(), sb.y(), sc.y()}))));
      if (x0 > x1 || y0 > y1) continue;

      const real inv_z[3] = {1.0 / a.p.z(), 1.0 / b.p.z(), 1.0 / c.p.z()};
      const Vec2 uv_over_z[3] = {a.uv * inv_z[0], b.uv * inv_z[1], c.uv * inv_z[2]};
      const real inv_area = 1.0 / area;

      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const real px = x + 0.5;
          const real py = y + 0.5;
          real l0 = ((sb.x() - px) * (sc.y() - py) - (sb.y() - py) * (sc.x() - px)) * inv_area;
          real l1 = ((sc.x() - px) * (sa.y() - py) - (sc.y() - py) * (sa.x() - px)) * inv_area;
          real l2 = 1.0 - l0 - l1;
          if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;

          const real q = l0 * inv_z[0] + l1 * inv_z[1] + l2 * inv_z[2];
          const real depth = 1.0 / q;
          const std::size_t pix = static_cast<std::size_t>(y) * W + x;
          if (depth >= zbuf[pix]) continue;
          zbuf[pix] = depth;
          const Vec2 uv =
              (l0 * uv_over_z[0] + l1 * uv_over_z[1] + l2 * uv_over_z[2]) * depth;
          buffers.uv[2 * pix] = std::clamp<real>(uv.x(), 0.0, 1.0);
          buffers.uv[2 * pix + 1] = std::clamp<real>(uv.y(), 0.0, 1.0);
          buffers.fg[pix] = 1;
          buffers.face[pix] = f;
        }
      }
    }
  }

  buffers.any_hit =
      std::any_of(buffers.fg.begin(), buffers.fg.end(), [](std::uint8_t v) { return v != 0; });
  return buffers;
}

Image render_content(const RenderBuffers& buffers, const Image& texture) {
  Image out(3, buffers.height, buffers.width);
  real rgb[3];
  for (int y = 0; y < buffers.height; ++y) {
    for (int x = 0; x < buffers.width; ++x) {
      if (!buffers.fg_at(y, x)) continue;
      const std::size_t pix = (static_cast<std::size_t>(y) * buffers.width + x) * 2;
      sample_bilinear_rgb(texture, buffers.uv[pix], tex_v_from_mesh_v(buffers.uv[pix + 1]), rgb);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = rgb[c];
    }
  }
  return out;
}

LabelImage render_semantics(const RenderBuffers& buffers, const LabelImage& semantics) {
  LabelImage out(buffers.height, buffers.width);
  for (int y = 0; y < buffers.height; ++y) {
    for (int x = 0; x < buffers.width; ++x) {
      if (!buffers.fg_at(y, x)) continue;
      const std::size_t pix = (static_cast<std::size_t>(y) * buffers.width + x) * 2;
      out.at(y, x) =
          sample_nearest(semantics, buffers.uv[pix], tex_v_from_mesh_v(buffers.uv[pix + 1]));
    }
  }
  return out;
}

namespace {

// Foreground pixels in row-major order with their field-space uv.
void collect_fg_uvs(const RenderBuffers& buffers, std::vector<real>* uvs,
                    std::vector<std::size_t>* pixels) {
  uvs->clear();
  pixels->clear();
  const std::size_t n = buffers.pixel_count();
  for (std::size_t pix = 0; pix < n; ++pix) {
    if (!buffers.fg[pix]) continue;
    uvs->push_back(buffers.uv[2 * pix]);
    uvs->push_back(tex_v_from_mesh_v(buffers.uv[2 * pix + 1]));
    pixels->push_back(pix);
  }
}

}  // namespace

Image render_from_field(const RenderBuffers& buffers, const NeuralTextureField& field) {
  Image out(3, buffers.height, buffers.width);
  std::vector<real> uvs;
  std::vector<std::size_t> pixels;
  collect_fg_uvs(buffers, &uvs, &pixels);
  if (pixels.empty()) return out;
  std::vector<real> rgb(pixels.size() * 3);
  field.query(uvs.data(), pixels.size(), rgb.data());
  const std::size_t plane = out.plane_size();
  for (std::size_t i = 0; i < pixels.size(); ++i)
    for (int c = 0; c < 3; ++c) out.data()[c * plane + pixels[i]] = rgb[3 * i + c];
  return out;
}

void render_from_field_backward(const RenderBuffers& buffers, NeuralTextureField& field,
                                const Image& d_image) {
  std::vector<real> uvs;
  std::vector<std::size_t> pixels;
  collect_fg_uvs(buffers, &uvs, &pixels);
  if (pixels.empty()) return;
  std::vector<real> d_rgb(pixels.size() * 3);
  const std::size_t plane = d_image.plane_size();
  for (std::size_t i = 0; i < pixels.size(); ++i)
    for (int c = 0; c < 3; ++c) d_rgb[3 * i + c] = d_image.data()[c * plane + pixels[i]];
  field.backward(uvs.data(), pixels.size(), d_rgb.data());
}

void dump_buffers(const RenderBuffers& buffers, const std::string& directory,
                  const std::string& basename) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  Image mask(1, buffers.height, buffers.width);
  for (std::size_t i = 0; i < buffers.pixel_count(); ++i)
    mask.data()[i] = buffers.fg[i] ? 1.0 : 0.0;
  write_png((fs::path(directory) / (basename + "_mask.png")).string(), mask);

  // UV as a PFM float image (u, v, 0); PFM rows run bottom-up.
  const std::string pfm_path = (fs::path(directory) / (basename + "_uv.pfm")).string();
  std::ofstream pfm(pfm_path, std::ios::binary);
  if (!pfm) throw Error::io("cannot write uv dump: " + pfm_path);
  pfm << "PF\n" << buffers.width << " " << buffers.height << "\n-1.0\n";
  for (int y = buffers.height - 1; y >= 0; --y) {
    for (int x = 0; x < buffers.width; ++x) {
      const std::size_t pix = (static_cast<std::size_t>(y) * buffers.width + x) * 2;
      const float px[3] = {static_cast<float>(buffers.uv[pix]),
                           static_cast<float>(buffers.uv[pix + 1]), 0.0f};
      pfm.write(reinterpret_cast<const char*>(px), sizeof(px));
    }
  }
}

}  // namespace citytex
