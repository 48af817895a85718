/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/embedding.hpp"
#include "citytex/features.hpp"
#include "citytex/image.hpp"

#include <string>
#include <vector>

namespace citytex {

// Structural similarity computed on gradient-magnitude edge maps of the
// grayscale inputs (3x3 Sobel, Rec.601 luma, 11x11 Gaussian SSIM window).
// The edge operator choice is echoed in MetricReport::edge_operator.
real essim(const Image& a, const Image& b);

// Perceptual feature distance (unit-normalized backbone features, uniform
// layer weights). Optionally accumulates d(distance)/d(a).
real perceptual_distance(const Image& a, const Image& b, const FeatureExtractor& fx,
                         Image* d_a_accum = nullptr);

// Perceptual distance with both inputs zeroed outside the mask. An all-false
// mask leaves the metric undefined and raises Error::validation.
real masked_lpips(const Image& a, const Image& b, const std::vector<std::uint8_t>& mask,
                  const FeatureExtractor& fx);

// Cosine similarity between image and text embeddings, in [-1, 1].
real clip_score(const Image& image, const std::string& text, const EmbeddingModel& em);

struct MetricReport {
  real essim = 0.0;
  real masked_lpips = 0.0;
  real clip_score = 0.0;
  std::vector<real> per_view_essim;
  std::vector<real> per_view_lpips;
  std::vector<real> per_view_clip;
  int view_count = 0;
  std::string edge_operator = "sobel3x3-luma";

  void validate() const;
  std::string to_json() const;
};

}  // namespace citytex
