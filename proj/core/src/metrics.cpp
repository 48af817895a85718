/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/metrics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace citytex {

namespace {

// Normalized 3x3 Sobel gradient magnitude of a grayscale image, valid
// interior only ((H-2) x (W-2)).
Image edge_magnitude(const Image& gray) {
  const int H = gray.height();
  const int W = gray.width();
  if (H < 3 || W < 3) throw Error::validation("image too small for the edge operator");
  Image out(1, H - 2, W - 2);
  const real* p = gray.plane(0);
  for (int y = 1; y < H - 1; ++y) {
    for (int x = 1; x < W - 1; ++x) {
      auto v = [&](int dy, int dx) { return p[static_cast<std::size_t>(y + dy) * W + x + dx]; };
      const real gx = (v(-1, 1) + 2 * v(0, 1) + v(1, 1) - v(-1, -1) - 2 * v(0, -1) - v(1, -1)) / 8.0;
      const real gy = (v(1, -1) + 2 * v(1, 0) + v(1, 1) - v(-1, -1) - 2 * v(-1, 0) - v(-1, 1)) / 8.0;
      out.at(0, y - 1, x - 1) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

std::vector<real> gaussian_window(int radius, real sigma) {
  std::vector<real> w(2 * radius + 1);
  real sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += w[i + radius];
  }
  for (real& v : w) v /= sum;
  return w;
}

// Separable valid-region Gaussian filter on a single-channel image.
Image gauss_filter(const Image& img, const std::vector<real>& w) {
  const int r = static_cast<int>(w.size() / 2);
  const int H = img.height();
  const int W = img.width();
  Image tmp(1, H, W - 2 * r);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W - 2 * r; ++x) {
      real acc = 0.0;
      for (int k = 0; k < static_cast<int>(w.size()); ++k) acc += w[k] * img.at(0, y, x + k);
      tmp.at(0, y, x) = acc;
    }
  Image out(1, H - 2 * r, W - 2 * r);
  for (int y = 0; y < H - 2 * r; ++y)
    for (int x = 0; x < W - 2 * r; ++x) {
      real acc = 0.0;
      for (int k = 0; k < static_cast<int>(w.size()); ++k) acc += w[k] * tmp.at(0, y + k, x);
      out.at(0, y, x) = acc;
    }
  return out;
}

Image hadamard(const Image& a, const Image& b) {
  Image out(1, a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

real ssim_mean(const Image& a, const Image& b) {
  constexpr real kC1 = 0.01 * 0.01;
  constexpr real kC2 = 0.03 * 0.03;
  const std::vector<real> w = gaussian_window(5, 1.5);
  if (a.height() < 11 || a.width() < 11)
    throw Error::validation("images too small for the 11x11 structural similarity window");

  const Image mu_a = gauss_filter(a, w);
  const Image mu_b = gauss_filter(b, w);
  const Image e_aa = gauss_filter(hadamard(a, a), w);
  const Image e_bb = gauss_filter(hadamard(b, b), w);
  const Image e_ab = gauss_filter(hadamard(a, b), w);

  real acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const real ma = mu_a.data()[i];
    const real mb = mu_b.data()[i];
    const real va = e_aa.data()[i] - ma * ma;
    const real vb = e_bb.data()[i] - mb * mb;
    const real cab = e_ab.data()[i] - ma * mb;
    const real num = (2.0 * ma * mb + kC1) * (2.0 * cab + kC2);
    const real den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
    acc += num / den;
  }
  return acc / static_cast<real>(mu_a.size());
}

}  // namespace

real essim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw Error::validation("images must have the same dimensions");
  return ssim_mean(edge_magnitude(to_grayscale(a)), edge_magnitude(to_grayscale(b)));
}

real perceptual_distance(const Image& a, const Image& b, const FeatureExtractor& fx,
                         Image* d_a_accum) {
  if (!a.same_shape(b)) throw Error::validation("images must have the same dimensions");
  const bool grad = d_a_accum != nullptr;
  const FeatureExtractor::Context a_ctx = fx.forward(a, FeatureExtractor::kContentTap, grad);
  const FeatureExtractor::Context b_ctx = fx.forward(b, FeatureExtractor::kContentTap, false);

  // Unit-normalization with sqrt(S + eps^2); positions whose feature vector
  // is exactly zero are treated as constants (zero gradient) so ReLU dead
  // zones cannot produce exploding normalization gradients.
  constexpr real kNormEps2 = 1e-20;
  real total = 0.0;
  TapGradients d_taps;
  std::vector<real> dd;  // per-channel 2*(ua-ub) scratch
  for (const int tap : FeatureExtractor::kStyleTaps) {
    const Image& fa = a_ctx.tap(tap);
    const Image& fb = b_ctx.tap(tap);
    const int C = fa.channels();
    const std::size_t n = fa.plane_size();
    dd.resize(C);
    Image* g = nullptr;
    if (grad) {
      Image& slot = d_taps[tap];
      slot = Image(C, fa.height(), fa.width());
      g = &slot;
    }
    const real inv_n = 1.0 / static_cast<real>(n);
    for (std::size_t i = 0; i < n; ++i) {
      real sa = 0.0, sb = 0.0;
      for (int c = 0; c < C; ++c) {
        const real va = fa.plane(c)[i];
        const real vb = fb.plane(c)[i];
        sa += va * va;
        sb += vb * vb;
      }
      const real na = std::sqrt(sa + kNormEps2);
      const real nb = std::sqrt(sb + kNormEps2);
      real dist = 0.0;
      real dot = 0.0;  // sum_c 2*(ua-ub) * ua, for the normalization backward
      for (int c = 0; c < C; ++c) {
        const real ua = fa.plane(c)[i] / na;
        const real ub = fb.plane(c)[i] / nb;
        const real d = ua - ub;
        dist += d * d;
        if (g) {
          dd[c] = 2.0 * d;
          dot += 2.0 * d * ua;
        }
      }
      total += dist * inv_n;
      if (g && sa > 0.0) {
        for (int c = 0; c < C; ++c) {
          const real ua = fa.plane(c)[i] / na;
          g->plane(c)[i] = (dd[c] - dot * ua) / na * inv_n;
        }
      }
    }
  }

  if (grad) {
    const Image d_a = fx.backward(a_ctx, d_taps);
    if (d_a_accum->empty()) *d_a_accum = Image(a.channels(), a.height(), a.width());
    for (std::size_t i = 0; i < d_a.size(); ++i) d_a_accum->data()[i] += d_a.data()[i];
  }
  return total;
}

real masked_lpips(const Image& a, const Image& b, const std::vector<std::uint8_t>& mask,
                  const FeatureExtractor& fx) {
  if (!a.same_shape(b)) throw Error::validation("images must have the same dimensions");
  if (mask.size() != a.plane_size()) throw Error::validation("mask size does not match the images");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }))
    throw Error::validation("mask is empty; the masked perceptual metric is undefined");

  Image am(a.channels(), a.height(), a.width());
  Image bm(b.channels(), b.height(), b.width());
  for (int c = 0; c < a.channels(); ++c)
    for (std::size_t i = 0; i < a.plane_size(); ++i) {
      am.plane(c)[i] = mask[i] ? a.plane(c)[i] : 0.0;
      bm.plane(c)[i] = mask[i] ? b.plane(c)[i] : 0.0;
    }
  return perceptual_distance(am, bm, fx);
}

real clip_score(const Image& image, const std::string& text, const EmbeddingModel& em) {
  if (text.empty()) throw Error::validation("text prompt must be non-empty");
  const EmbeddingModel::Vector ei = em.embed_image(image);
  const EmbeddingModel::Vector et = em.embed_text(text);
  const real ni = ei.norm();
  const real nt = et.norm();
  if (ni < 1e-12 || nt < 1e-12) return 0.0;
  return std::clamp<real>(ei.dot(et) / (ni * nt), -1.0, 1.0);
}

void MetricReport::validate() const {
  if (essim < -1.0 - 1e-9 || essim > 1.0 + 1e-9)
    throw Error::validation("edge similarity outside [-1, 1]");
  if (masked_lpips < 0.0) throw Error::validation("perceptual distance must be nonnegative");
  if (clip_score < -1.0 - 1e-9 || clip_score > 1.0 + 1e-9)
    throw Error::validation("image-text score outside [-1, 1]");
}

std::string MetricReport::to_json() const {
  nlohmann::json doc;
  doc["edge_operator"] = edge_operator;
  doc["essim"] = essim;
  doc["masked_lpips"] = masked_lpips;
  doc["clip_score"] = clip_score;
  doc["view_count"] = view_count;
  doc["per_view"] = {{"essim", per_view_essim},
                     {"masked_lpips", per_view_lpips},
                     {"clip_score", per_view_clip}};
  return doc.dump(2);
}

}  // namespace citytex
