/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/style_bank.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace citytex {

void StyleReference::validate() const {
  if (image.channels() != 3 || image.width() < 1 || image.height() < 1)
    throw Error::validation("style image must be a non-empty RGB image");
  if (segmentation.width != image.width() || segmentation.height != image.height())
    throw Error::validation("style segmentation must match the style image dimensions");
  if (source_text.empty() || target_text.empty())
    throw Error::validation("style source and target prompts must be non-empty");
}

StructureDescriptor self_similarity(const Image& feature_map, int downsample_to) {
  if (feature_map.empty()) throw Error::validation("empty feature map");
  const int s = downsample_to;
  const Image f = (feature_map.height() == s && feature_map.width() == s)
                      ? feature_map
                      : resize_bilinear(feature_map, s, s);
  const int C = f.channels();
  const int n = s * s;

  Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic> cols(C, n);
  for (int c = 0; c < C; ++c) {
    const real* p = f.plane(c);
    for (int i = 0; i < n; ++i) cols(c, i) = p[i];
  }
  for (int i = 0; i < n; ++i) {
    const real norm = cols.col(i).norm();
    if (norm > 0.0)
      cols.col(i) /= norm;
    else
      cols.col(i).setZero();  // zero-norm vectors contribute 0 off-diagonal
  }

  StructureDescriptor d;
  d.grid = s;
  d.similarity = cols.transpose() * cols;
  d.similarity.diagonal().setOnes();
  return d;
}

real descriptor_distance(const StructureDescriptor& a, const StructureDescriptor& b) {
  if (a.grid != b.grid) throw Error::validation("descriptor grids differ");
  return (a.similarity - b.similarity).squaredNorm();
}

StructureDescriptor view_descriptor(const Image& rgb, const FeatureExtractor& fx,
                                    int descriptor_grid) {
  const FeatureExtractor::Context ctx =
      fx.forward(rgb, FeatureExtractor::kStructureTap, /*retain_state=*/false);
  return self_similarity(ctx.tap(FeatureExtractor::kStructureTap), descriptor_grid);
}

PatchBank build_patch_bank(const StyleReference& style, const std::vector<int>& scales,
                           int n_per_scale, Rng& rng, const FeatureExtractor& fx,
                           int descriptor_grid, int feature_resolution) {
  style.validate();
  const int W = style.image.width();
  const int H = style.image.height();
  if (std::max(W, H) < kMinPatchSide)
    throw Error::validation(fmt::format(
        "style image {}x{} is smaller than {} on both sides; patches cannot be built", W, H,
        kMinPatchSide));
  for (const int s : scales) {
    if (s < kMinPatchSide)
      throw Error::validation(fmt::format("crop side {} below the minimum {}", s, kMinPatchSide));
    if (s > W || s > H)
      throw Error::validation(fmt::format("crop side {} exceeds style image {}x{}", s, W, H));
  }

  PatchBank bank;
  std::set<std::array<int, 4>> seen;
  auto add_patch = [&](int x, int y, int w, int h, int scale_tag) {
    if (!seen.insert({x, y, w, h}).second) return;
    StylePatch patch;
    patch.x = x;
    patch.y = y;
    patch.w = w;
    patch.h = h;
    patch.scale_tag = scale_tag;
    patch.image = crop(style.image, x, y, w, h);
    patch.segmentation = crop(style.segmentation, x, y, w, h);
    Image resized;
    const Image* feat_input = &patch.image;
    if (feature_resolution > 0 && (w != feature_resolution || h != feature_resolution)) {
      resized = resize_bilinear(patch.image, feature_resolution, feature_resolution);
      feat_input = &resized;
    }
    patch.descriptor = view_descriptor(*feat_input, fx, descriptor_grid);
    bank.patches.push_back(std::move(patch));
  };

  for (const int s : scales) {
    for (int i = 0; i < n_per_scale; ++i) {
      const int x = static_cast<int>(rng.uniform_index(W - s + 1));
      const int y = static_cast<int>(rng.uniform_index(H - s + 1));
      add_patch(x, y, s, s, s);
    }
  }
  add_patch(0, 0, W, H, std::max(W, H));  // full-scale fallback reference
  return bank;
}

int match_patch_index(const StructureDescriptor& view, const PatchBank& bank) {
  if (bank.empty()) throw Error::validation("patch bank is empty");
  int best = 0;
  real best_d = std::numeric_limits<real>::max();
  for (std::size_t i = 0; i < bank.patches.size(); ++i) {
    const real d = descriptor_distance(view, bank.patches[i].descriptor);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

const StylePatch& match_patch(const Image& view, const PatchBank& bank,
                              const FeatureExtractor& fx, int descriptor_grid) {
  const StructureDescriptor d = view_descriptor(view, fx, descriptor_grid);
  return bank.patches[match_patch_index(d, bank)];
}

std::vector<int> scales_for_level(int level, int levels, int source_min_side) {
  const int max_side = std::max(source_min_side, kMinPatchSide);
  const real t = levels <= 1 ? 0.0 : static_cast<real>(level) / (levels - 1);
  const int preferred =
      static_cast<int>(std::lround(max_side - t * (max_side - kMinPatchSide)));
  std::vector<int> out;
  for (const real factor : {0.75, 1.0, 1.25}) {
    const int s = std::clamp(static_cast<int>(std::lround(preferred * factor)), kMinPatchSide,
                             max_side);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace citytex
