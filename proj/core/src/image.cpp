/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/image.hpp"

#include <algorithm>
#include <cmath>

namespace citytex {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct BilinearTap {
  int x0, x1, y0, y1;
  real wx, wy;
};

inline BilinearTap bilinear_tap(const int w, const int h, real u, real v) {
  const real x = u * w - 0.5;
  const real y = v * h - 0.5;
  const real xf = std::floor(x);
  const real yf = std::floor(y);
  BilinearTap t;
  t.wx = x - xf;
  t.wy = y - yf;
  t.x0 = clampi(static_cast<int>(xf), 0, w - 1);
  t.x1 = clampi(static_cast<int>(xf) + 1, 0, w - 1);
  t.y0 = clampi(static_cast<int>(yf), 0, h - 1);
  t.y1 = clampi(static_cast<int>(yf) + 1, 0, h - 1);
  return t;
}

// Overlap of source pixel columns with output cell [a, b) for the box filter.
void box_weights(int in_size, int out_size, int out_idx, int* first, int* count, real* weights) {
  const real scale = static_cast<real>(in_size) / out_size;
  const real a = out_idx * scale;
  const real b = (out_idx + 1) * scale;
  const int i0 = static_cast<int>(std::floor(a));
  const int i1 = std::min(static_cast<int>(std::ceil(b)), in_size);
  *first = i0;
  *count = i1 - i0;
  for (int i = i0; i < i1; ++i) {
    const real lo = std::max(a, static_cast<real>(i));
    const real hi = std::min(b, static_cast<real>(i + 1));
    weights[i - i0] = std::max<real>(hi - lo, 0.0) / (b - a);
  }
}

}  // namespace

real sample_bilinear(const Image& img, int channel, real u, real v) {
  const BilinearTap t = bilinear_tap(img.width(), img.height(), u, v);
  const real* p = img.plane(channel);
  const int w = img.width();
  const real v00 = p[t.y0 * w + t.x0];
  const real v01 = p[t.y0 * w + t.x1];
  const real v10 = p[t.y1 * w + t.x0];
  const real v11 = p[t.y1 * w + t.x1];
  const real top = v00 + (v01 - v00) * t.wx;
  const real bot = v10 + (v11 - v10) * t.wx;
  return top + (bot - top) * t.wy;
}

void sample_bilinear_rgb(const Image& img, real u, real v, real* out) {
  const BilinearTap t = bilinear_tap(img.width(), img.height(), u, v);
  const int w = img.width();
  for (int c = 0; c < img.channels(); ++c) {
    const real* p = img.plane(c);
    const real v00 = p[t.y0 * w + t.x0];
    const real v01 = p[t.y0 * w + t.x1];
    const real v10 = p[t.y1 * w + t.x0];
    const real v11 = p[t.y1 * w + t.x1];
    const real top = v00 + (v01 - v00) * t.wx;
    const real bot = v10 + (v11 - v10) * t.wx;
    out[c] = top + (bot - top) * t.wy;
  }
}

std::int16_t sample_nearest(const LabelImage& labels, real u, real v) {
  const int x = clampi(static_cast<int>(std::floor(u * labels.width)), 0, labels.width - 1);
  const int y = clampi(static_cast<int>(std::floor(v * labels.height)), 0, labels.height - 1);
  return labels.at(y, x);
}

Image resize_area(const Image& src, int out_height, int out_width) {
  Image dst(src.channels(), out_height, out_width);
  std::vector<real> wx(src.width());
  std::vector<real> wy(src.height());
  for (int oy = 0; oy < out_height; ++oy) {
    int y0, ny;
    box_weights(src.height(), out_height, oy, &y0, &ny, wy.data());
    for (int ox = 0; ox < out_width; ++ox) {
      int x0, nx;
      box_weights(src.width(), out_width, ox, &x0, &nx, wx.data());
      for (int c = 0; c < src.channels(); ++c) {
        const real* p = src.plane(c);
        real acc = 0.0;
        for (int j = 0; j < ny; ++j) {
          const real* row = p + static_cast<std::size_t>(y0 + j) * src.width() + x0;
          real rowacc = 0.0;
          for (int i = 0; i < nx; ++i) rowacc += wx[i] * row[i];
          acc += wy[j] * rowacc;
        }
        dst.at(c, oy, ox) = acc;
      }
    }
  }
  return dst;
}

void resize_area_adjoint(const Image& d_out, int in_height, int in_width, Image& d_in_accum) {
  if (d_in_accum.empty()) d_in_accum = Image(d_out.channels(), in_height, in_width);
  std::vector<real> wx(in_width);
  std::vector<real> wy(in_height);
  for (int oy = 0; oy < d_out.height(); ++oy) {
    int y0, ny;
    box_weights(in_height, d_out.height(), oy, &y0, &ny, wy.data());
    for (int ox = 0; ox < d_out.width(); ++ox) {
      int x0, nx;
      box_weights(in_width, d_out.width(), ox, &x0, &nx, wx.data());
      for (int c = 0; c < d_out.channels(); ++c) {
        const real g = d_out.at(c, oy, ox);
        real* p = d_in_accum.plane(c);
        for (int j = 0; j < ny; ++j) {
          real* row = p + static_cast<std::size_t>(y0 + j) * in_width + x0;
          const real gy = g * wy[j];
          for (int i = 0; i < nx; ++i) row[i] += gy * wx[i];
        }
      }
    }
  }
}

Image resize_bilinear(const Image& src, int out_height, int out_width) {
  Image dst(src.channels(), out_height, out_width);
  std::vector<real> px(src.channels());
  for (int y = 0; y < out_height; ++y) {
    const real v = (y + 0.5) / out_height;
    for (int x = 0; x < out_width; ++x) {
      const real u = (x + 0.5) / out_width;
      sample_bilinear_rgb(src, u, v, px.data());
      for (int c = 0; c < src.channels(); ++c) dst.at(c, y, x) = px[c];
    }
  }
  return dst;
}

Image crop(const Image& src, int x, int y, int w, int h) {
  Image dst(src.channels(), h, w);
  for (int c = 0; c < src.channels(); ++c)
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) dst.at(c, j, i) = src.at(c, y + j, x + i);
  return dst;
}

LabelImage crop(const LabelImage& src, int x, int y, int w, int h) {
  LabelImage dst(h, w);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) dst.at(j, i) = src.at(y + j, x + i);
  return dst;
}

LabelImage resize_nearest(const LabelImage& src, int out_height, int out_width) {
  LabelImage dst(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    const int sy = std::min(static_cast<int>((y + 0.5) * src.height / out_height), src.height - 1);
    for (int x = 0; x < out_width; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * src.width / out_width), src.width - 1);
      dst.at(y, x) = src.at(sy, sx);
    }
  }
  return dst;
}

real mean_abs_diff(const Image& a, const Image& b) {
  real acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.data()[i] - b.data()[i]);
  return acc / static_cast<real>(a.size());
}

real mse(const Image& a, const Image& b) {
  real acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const real d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return acc / static_cast<real>(a.size());
}

real psnr(const Image& a, const Image& b) {
  const real m = mse(a, b);
  if (m <= 0.0) return std::numeric_limits<real>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

Image to_grayscale(const Image& rgb) {
  if (rgb.channels() == 1) return rgb;
  Image g(1, rgb.height(), rgb.width());
  const real* r = rgb.plane(0);
  const real* gg = rgb.plane(1);
  const real* b = rgb.plane(2);
  real* out = g.plane(0);
  for (std::size_t i = 0; i < g.plane_size(); ++i)
    out[i] = 0.299 * r[i] + 0.587 * gg[i] + 0.114 * b[i];
  return g;
}

}  // namespace citytex
