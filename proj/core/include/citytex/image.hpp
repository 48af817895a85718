/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/common.hpp"

#include <cstdint>
#include <vector>

namespace citytex {

// Planar channel-major image (or feature map): data[c*H*W + y*W + x].
// RGB images use values in [0,1]; feature maps are unbounded.
//
// Texel-center convention, shared by every sampler in the project:
// continuous coordinate u in [0,1] maps to pixel space as x = u*W - 0.5,
// so texel i has center u = (i + 0.5) / W. v runs top-down (row 0 is v=0).
class Image {
public:
  Image() = default;
  Image(int channels, int height, int width, real fill = 0.0)
      : channels_(channels), height_(height), width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {}

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  real& at(int c, int y, int x) { return data_[idx(c, y, x)]; }
  real at(int c, int y, int x) const { return data_[idx(c, y, x)]; }

  real* plane(int c) { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }
  const real* plane(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }

  std::vector<real>& data() { return data_; }
  const std::vector<real>& data() const { return data_; }

  bool same_shape(const Image& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

private:
  std::size_t idx(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<real> data_;
};

// Per-pixel integer labels. kUnlabeled marks texels not covered by any class.
struct LabelImage {
  static constexpr std::int16_t kUnlabeled = -1;

  LabelImage() = default;
  LabelImage(int height, int width, std::int16_t fill = kUnlabeled)
      : height(height), width(width),
        labels(static_cast<std::size_t>(height) * width, fill) {}

  int height = 0;
  int width = 0;
  std::vector<std::int16_t> labels;

  std::int16_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::int16_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return labels.empty(); }
};

// Bilinear sample of one channel at (u,v) in [0,1]^2, clamped at borders.
real sample_bilinear(const Image& img, int channel, real u, real v);
// All channels at once.
void sample_bilinear_rgb(const Image& img, real u, real v, real* out);

// Nearest-texel lookup for label maps.
std::int16_t sample_nearest(const LabelImage& labels, real u, real v);

// Area-weighted resize (exact box filter for any size ratio). Adjoint
// scatters gradients back through the same weights; together they form the
// differentiable downsampling used by the photorealism regularizer.
Image resize_area(const Image& src, int out_height, int out_width);
void resize_area_adjoint(const Image& d_out, int in_height, int in_width, Image& d_in_accum);

Image resize_bilinear(const Image& src, int out_height, int out_width);

Image crop(const Image& src, int x, int y, int w, int h);
LabelImage crop(const LabelImage& src, int x, int y, int w, int h);
LabelImage resize_nearest(const LabelImage& src, int out_height, int out_width);

real mean_abs_diff(const Image& a, const Image& b);
real mse(const Image& a, const Image& b);
real psnr(const Image& a, const Image& b);  // peak = 1.0

Image to_grayscale(const Image& rgb);  // Rec.601 luma weights

}  // namespace citytex
