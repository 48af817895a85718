/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/camera.hpp"
#include "citytex/scene.hpp"

#include <cstdint>
#include <vector>

namespace citytex {

class NeuralTextureField;

// Per-pixel output of rasterization. uv entries hold mesh-convention
// coordinates and are valid exactly where fg is set; face holds the
// triangle index (-1 for background).
struct RenderBuffers {
  int width = 0;
  int height = 0;
  std::vector<real> uv;          // 2 per pixel, (-1,-1) where background
  std::vector<std::uint8_t> fg;  // 1 where the mesh was hit
  std::vector<std::int32_t> face;
  bool any_hit = false;          // false flags an all-background render

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool fg_at(int y, int x) const { return fg[static_cast<std::size_t>(y) * width + x] != 0; }
};

inline constexpr int kDefaultMaxRenderResolution = 512;

// Perspective rasterization with a depth buffer and perspective-correct UV
// interpolation. Triangles are clipped against the near plane. Resolutions
// above max_resolution are rejected.
RenderBuffers rasterize(const TexturedScene& scene, const CameraPose& camera,
                        int max_resolution = kDefaultMaxRenderResolution);

// Content view: bilinear texture lookup per covered pixel, black background.
Image render_content(const RenderBuffers& buffers, const Image& texture);

// Label view: nearest-texel semantic lookup, unlabeled background.
LabelImage render_semantics(const RenderBuffers& buffers, const LabelImage& semantics);

// Stylized view: queries the neural texture at each covered pixel's UV.
// Background stays zero so it contributes nothing to any loss.
Image render_from_field(const RenderBuffers& buffers, const NeuralTextureField& field);

// Accumulates d(loss)/d(field parameters) given d(loss)/d(rendered image).
// Must be paired with the same buffers used for the forward render.
void render_from_field_backward(const RenderBuffers& buffers, NeuralTextureField& field,
                                const Image& d_image);

// Debug dump: uv as a two-plane 16-bit quantized PNG pair plus the mask.
void dump_buffers(const RenderBuffers& buffers, const std::string& directory,
                  const std::string& basename);

}  // namespace citytex
