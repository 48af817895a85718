/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/embedding.hpp"
#include "citytex/features.hpp"
#include "citytex/matting.hpp"
#include "citytex/semantics.hpp"
#include "citytex/style_bank.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace citytex {

struct LossWeights {
  real content = 10.0;
  real photorealism = 1e-3;
  real global_style = 1.0;
  real text = 5.0;
  real local_style = 0.1;
  real edited = 0.0;  // enabled (1.0) in edit-propagation mode
  int photorealism_warmup_epochs = 2;

  void validate() const;
};

// Per-channel mean/std distance between two feature maps, restricted to the
// masked positions on each side. Gradient flows to `b` only. Either side
// masking out every position makes the call contribute zero.
real feature_stats_loss(const Image& a, const std::vector<std::uint8_t>* mask_a, const Image& b,
                        const std::vector<std::uint8_t>* mask_b, Image* d_b_accum = nullptr,
                        real grad_scale = 1.0);

std::vector<std::uint8_t> downsample_mask(const std::vector<std::uint8_t>& mask, int height,
                                          int width, int out_height, int out_width);

// ---- context-level losses (share one backbone pass per image) ----

real content_loss_ctx(const FeatureExtractor::Context& c_ctx,
                      const FeatureExtractor::Context& z_ctx, TapGradients* d_taps = nullptr,
                      real grad_scale = 1.0);

real global_style_loss_ctx(const FeatureExtractor::Context& style_ctx,
                           const FeatureExtractor::Context& z_ctx,
                           const std::vector<std::uint8_t>* z_mask_pixels, int z_height,
                           int z_width, TapGradients* d_taps = nullptr, real grad_scale = 1.0);

struct LocalStyleCounters {
  int no_reference = 0;
  int rematched = 0;
  int skipped_small = 0;
};

real local_semantic_loss_ctx(const FeatureExtractor::Context& z_ctx, const LabelImage& z_labels,
                             const std::vector<std::uint8_t>* z_mask_pixels, int z_height,
                             int z_width, const FeatureExtractor::Context& patch_ctx,
                             const LabelImage& patch_labels,
                             const FeatureExtractor::Context& full_ctx,
                             const LabelImage& full_labels, const SemanticClassSet& classes,
                             LocalStyleCounters* counters = nullptr,
                             TapGradients* d_taps = nullptr, real grad_scale = 1.0);

// ---- image-level losses (run the backbone internally) ----

real content_loss(const Image& c, const Image& z, const FeatureExtractor& fx,
                  Image* d_z_accum = nullptr);

real global_style_loss(const Image& style, const Image& z, const FeatureExtractor& fx,
                       const std::vector<std::uint8_t>* z_mask_pixels = nullptr,
                       Image* d_z_accum = nullptr);

real local_semantic_loss(const Image& z, const LabelImage& z_labels, const Image& patch,
                         const LabelImage& patch_labels, const Image& full_style,
                         const LabelImage& full_labels, const SemanticClassSet& classes,
                         const FeatureExtractor& fx, LocalStyleCounters* counters = nullptr,
                         Image* d_z_accum = nullptr,
                         const std::vector<std::uint8_t>* z_mask_pixels = nullptr);

struct ClipLossResult {
  real global = 0.0;
  real directional = 0.0;
  real total = 0.0;
};

// Global text alignment plus directional (embedding displacement) loss.
// Cosines against zero-norm vectors are defined as 0, so the degenerate
// directional loss is exactly 1 with a zero gradient.
ClipLossResult clip_losses(const Image& c, const Image& z, const std::string& source_text,
                           const std::string& target_text, const EmbeddingModel& em,
                           Image* d_z_accum = nullptr);

real edited_view_penalty(const Image& z_edited, const Image& s_edited,
                         Image* d_z_accum = nullptr);

// ---- total ----

struct LossValues {
  real content = 0.0;
  real photorealism = 0.0;
  real global_style = 0.0;
  real clip = 0.0;
  real local_style = 0.0;
  std::optional<real> edited;
};

struct LossBreakdown {
  std::vector<std::pair<std::string, real>> terms;  // weighted contributions
  real total = 0.0;
};

// Weighted sum with the photorealism term forced to zero during warmup
// epochs. Non-finite inputs abort with the offending term named. The
// breakdown entries sum to `total` exactly (same additions, same order).
LossBreakdown total_loss(const LossValues& values, const LossWeights& weights, int epoch);

}  // namespace citytex
