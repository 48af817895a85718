/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/losses.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace citytex {

namespace {

constexpr real kSigmaEps = 1e-12;   // keeps std differentiable at zero variance
constexpr int kRoiMinPositions = 4; // below this, per-layer class stats are skipped

Image& tap_grad(TapGradients& d_taps, int tap, const Image& like) {
  Image& g = d_taps[tap];
  if (g.empty()) g = Image(like.channels(), like.height(), like.width());
  return g;
}

struct ChannelStats {
  real mean, sigma;
  std::size_t count;
};

ChannelStats masked_stats(const real* plane, std::size_t n, const std::vector<std::uint8_t>* mask) {
  ChannelStats s{0.0, 0.0, 0};
  real sum = 0.0, sum2 = 0.0;
  if (mask) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*mask)[i]) continue;
      sum += plane[i];
      sum2 += plane[i] * plane[i];
      ++s.count;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      sum += plane[i];
      sum2 += plane[i] * plane[i];
    }
    s.count = n;
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<real>(s.count);
  const real var = std::max<real>(sum2 / static_cast<real>(s.count) - s.mean * s.mean, 0.0);
  s.sigma = std::sqrt(var + kSigmaEps);
  return s;
}

}  // namespace

void LossWeights::validate() const {
  if (content < 0 || photorealism < 0 || global_style < 0 || text < 0 || local_style < 0 ||
      edited < 0 || photorealism_warmup_epochs < 0)
    throw Error::validation("loss weights must be nonnegative");
}

real feature_stats_loss(const Image& a, const std::vector<std::uint8_t>* mask_a, const Image& b,
                        const std::vector<std::uint8_t>* mask_b, Image* d_b_accum,
                        real grad_scale) {
  if (a.channels() != b.channels())
    throw Error::validation("feature maps must have the same channel count");
  const int C = a.channels();
  real loss = 0.0;
  for (int c = 0; c < C; ++c) {
    const ChannelStats sa = masked_stats(a.plane(c), a.plane_size(), mask_a);
    const ChannelStats sb = masked_stats(b.plane(c), b.plane_size(), mask_b);
    if (sa.count == 0 || sb.count == 0) continue;
    const real dmean = sa.mean - sb.mean;
    const real dsigma = sa.sigma - sb.sigma;
    loss += (dmean * dmean + dsigma * dsigma) / C;

    if (d_b_accum) {
      if (d_b_accum->empty()) *d_b_accum = Image(b.channels(), b.height(), b.width());
      const real g_mean = grad_scale * -2.0 * dmean / (C * static_cast<real>(sb.count));
      const real g_sigma =
          grad_scale * -2.0 * dsigma / (C * static_cast<real>(sb.count) * sb.sigma);
      const real* bp = b.plane(c);
      real* gp = d_b_accum->plane(c);
      for (std::size_t i = 0; i < b.plane_size(); ++i) {
        if (mask_b && !(*mask_b)[i]) continue;
        gp[i] += g_mean + g_sigma * (bp[i] - sb.mean);
      }
    }
  }
  return loss;
}

std::vector<std::uint8_t> downsample_mask(const std::vector<std::uint8_t>& mask, int height,
                                          int width, int out_height, int out_width) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(out_height) * out_width, 0);
  for (int y = 0; y < out_height; ++y) {
    const int sy = std::min(static_cast<int>((y + 0.5) * height / out_height), height - 1);
    for (int x = 0; x < out_width; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * width / out_width), width - 1);
      out[static_cast<std::size_t>(y) * out_width + x] =
          mask[static_cast<std::size_t>(sy) * width + sx];
    }
  }
  return out;
}

real content_loss_ctx(const FeatureExtractor::Context& c_ctx,
                      const FeatureExtractor::Context& z_ctx, TapGradients* d_taps,
                      real grad_scale) {
  const int tap = FeatureExtractor::kContentTap;
  const Image& fc = c_ctx.tap(tap);
  const Image& fz = z_ctx.tap(tap);
  if (!fc.same_shape(fz)) throw Error::validation("content feature maps differ in shape");
  const real inv_n = 1.0 / static_cast<real>(fc.size());
  real loss = 0.0;
  Image* g = d_taps ? &tap_grad(*d_taps, tap, fz) : nullptr;
  for (std::size_t i = 0; i < fc.size(); ++i) {
    const real d = fc.data()[i] - fz.data()[i];
    loss += d * d * inv_n;
    if (g) g->data()[i] += grad_scale * -2.0 * d * inv_n;
  }
  return loss;
}

real global_style_loss_ctx(const FeatureExtractor::Context& style_ctx,
                           const FeatureExtractor::Context& z_ctx,
                           const std::vector<std::uint8_t>* z_mask_pixels, int z_height,
                           int z_width, TapGradients* d_taps, real grad_scale) {
  real loss = 0.0;
  for (const int tap : FeatureExtractor::kStyleTaps) {
    const Image& fs = style_ctx.tap(tap);
    const Image& fz = z_ctx.tap(tap);
    std::vector<std::uint8_t> mask;
    const std::vector<std::uint8_t>* mask_ptr = nullptr;
    if (z_mask_pixels) {
      mask = downsample_mask(*z_mask_pixels, z_height, z_width, fz.height(), fz.width());
      mask_ptr = &mask;
    }
    Image* g = d_taps ? &tap_grad(*d_taps, tap, fz) : nullptr;
    loss += feature_stats_loss(fs, nullptr, fz, mask_ptr, g, grad_scale);
  }
  return loss;
}

namespace {

std::vector<std::uint8_t> class_mask(const LabelImage& labels, int cls,
                                     const std::vector<std::uint8_t>* fg) {
  std::vector<std::uint8_t> mask(labels.labels.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = (labels.labels[i] == cls && (!fg || (*fg)[i])) ? 1 : 0;
  return mask;
}

std::size_t mask_count(const std::vector<std::uint8_t>& mask) {
  std::size_t n = 0;
  for (const std::uint8_t v : mask) n += v;
  return n;
}

}  // namespace

real local_semantic_loss_ctx(const FeatureExtractor::Context& z_ctx, const LabelImage& z_labels,
                             const std::vector<std::uint8_t>* z_mask_pixels, int z_height,
                             int z_width, const FeatureExtractor::Context& patch_ctx,
                             const LabelImage& patch_labels,
                             const FeatureExtractor::Context& full_ctx,
                             const LabelImage& full_labels, const SemanticClassSet& classes,
                             LocalStyleCounters* counters, TapGradients* d_taps,
                             real grad_scale) {
  const int n_classes = classes.size();
  real loss = 0.0;

  for (const int tap : FeatureExtractor::kStyleTaps) {
    const Image& fz = z_ctx.tap(tap);
    const Image& fp = patch_ctx.tap(tap);
    const Image& ff = full_ctx.tap(tap);

    const LabelImage zl = resize_nearest(z_labels, fz.height(), fz.width());
    const LabelImage pl = resize_nearest(patch_labels, fp.height(), fp.width());
    const LabelImage fl = resize_nearest(full_labels, ff.height(), ff.width());

    std::vector<std::uint8_t> z_fg;
    const std::vector<std::uint8_t>* z_fg_ptr = nullptr;
    if (z_mask_pixels) {
      z_fg = downsample_mask(*z_mask_pixels, z_height, z_width, fz.height(), fz.width());
      z_fg_ptr = &z_fg;
    }

    // Per-class position counts at this layer decide presence.
    std::vector<std::size_t> count_patch(n_classes, 0), count_full(n_classes, 0);
    for (const std::int16_t v : pl.labels)
      if (v >= 0 && v < n_classes) ++count_patch[v];
    for (const std::int16_t v : fl.labels)
      if (v >= 0 && v < n_classes) ++count_full[v];
    std::vector<bool> avail_patch(n_classes), avail_full(n_classes);
    for (int i = 0; i < n_classes; ++i) {
      avail_patch[i] = count_patch[i] >= kRoiMinPositions;
      avail_full[i] = count_full[i] >= kRoiMinPositions;
    }

    for (int cls = 0; cls < n_classes; ++cls) {
      const std::vector<std::uint8_t> zmask = class_mask(zl, cls, z_fg_ptr);
      const std::size_t mz = mask_count(zmask);
      if (mz == 0) continue;
      if (mz < kRoiMinPositions) {
        if (counters) ++counters->skipped_small;
        continue;
      }

      // Reference chain: patch ROI, re-matched patch ROI, full-style ROI,
      // re-matched full-style ROI, else give up for this class.
      const Image* ref_map = nullptr;
      int ref_cls = cls;
      const LabelImage* ref_labels = nullptr;
      if (avail_patch[cls]) {
        ref_map = &fp;
        ref_labels = &pl;
      } else {
        try {
          ref_cls = rematch_class_index(cls, avail_patch, classes);
          ref_map = &fp;
          ref_labels = &pl;
          if (counters) ++counters->rematched;
        } catch (const Error&) {
          if (avail_full[cls]) {
            ref_map = &ff;
            ref_cls = cls;
            ref_labels = &fl;
          } else {
            try {
              ref_cls = rematch_class_index(cls, avail_full, classes);
              ref_map = &ff;
              ref_labels = &fl;
              if (counters) ++counters->rematched;
            } catch (const Error&) {
              if (counters) ++counters->no_reference;
              continue;
            }
          }
        }
      }

      const std::vector<std::uint8_t> smask = class_mask(*ref_labels, ref_cls, nullptr);
      Image* g = d_taps ? &tap_grad(*d_taps, tap, fz) : nullptr;
      loss += feature_stats_loss(*ref_map, &smask, fz, &zmask, g, grad_scale);
    }
  }
  return loss;
}

real content_loss(const Image& c, const Image& z, const FeatureExtractor& fx, Image* d_z_accum) {
  if (!c.same_shape(z)) throw Error::validation("content and stylized views differ in shape");
  const FeatureExtractor::Context c_ctx = fx.forward(c, FeatureExtractor::kContentTap, false);
  const FeatureExtractor::Context z_ctx =
      fx.forward(z, FeatureExtractor::kContentTap, d_z_accum != nullptr);
  if (!d_z_accum) return content_loss_ctx(c_ctx, z_ctx, nullptr);
  TapGradients d_taps;
  const real loss = content_loss_ctx(c_ctx, z_ctx, &d_taps);
  const Image d_z = fx.backward(z_ctx, d_taps);
  if (d_z_accum->empty()) *d_z_accum = Image(z.channels(), z.height(), z.width());
  for (std::size_t i = 0; i < d_z.size(); ++i) d_z_accum->data()[i] += d_z.data()[i];
  return loss;
}

real global_style_loss(const Image& style, const Image& z, const FeatureExtractor& fx,
                       const std::vector<std::uint8_t>* z_mask_pixels, Image* d_z_accum) {
  const FeatureExtractor::Context s_ctx = fx.forward(style, FeatureExtractor::kContentTap, false);
  const FeatureExtractor::Context z_ctx =
      fx.forward(z, FeatureExtractor::kContentTap, d_z_accum != nullptr);
  if (!d_z_accum)
    return global_style_loss_ctx(s_ctx, z_ctx, z_mask_pixels, z.height(), z.width(), nullptr);
  TapGradients d_taps;
  const real loss =
      global_style_loss_ctx(s_ctx, z_ctx, z_mask_pixels, z.height(), z.width(), &d_taps);
  const Image d_z = fx.backward(z_ctx, d_taps);
  if (d_z_accum->empty()) *d_z_accum = Image(z.channels(), z.height(), z.width());
  for (std::size_t i = 0; i < d_z.size(); ++i) d_z_accum->data()[i] += d_z.data()[i];
  return loss;
}

real local_semantic_loss(const Image& z, const LabelImage& z_labels, const Image& patch,
                         const LabelImage& patch_labels, const Image& full_style,
                         const LabelImage& full_labels, const SemanticClassSet& classes,
                         const FeatureExtractor& fx, LocalStyleCounters* counters,
                         Image* d_z_accum, const std::vector<std::uint8_t>* z_mask_pixels) {
  const FeatureExtractor::Context p_ctx = fx.forward(patch, FeatureExtractor::kContentTap, false);
  const FeatureExtractor::Context f_ctx =
      fx.forward(full_style, FeatureExtractor::kContentTap, false);
  const FeatureExtractor::Context z_ctx =
      fx.forward(z, FeatureExtractor::kContentTap, d_z_accum != nullptr);
  if (!d_z_accum)
    return local_semantic_loss_ctx(z_ctx, z_labels, z_mask_pixels, z.height(), z.width(), p_ctx,
                                   patch_labels, f_ctx, full_labels, classes, counters, nullptr);
  TapGradients d_taps;
  const real loss =
      local_semantic_loss_ctx(z_ctx, z_labels, z_mask_pixels, z.height(), z.width(), p_ctx,
                              patch_labels, f_ctx, full_labels, classes, counters, &d_taps);
  const Image d_z = fx.backward(z_ctx, d_taps);
  if (d_z_accum->empty()) *d_z_accum = Image(z.channels(), z.height(), z.width());
  for (std::size_t i = 0; i < d_z.size(); ++i) d_z_accum->data()[i] += d_z.data()[i];
  return loss;
}

namespace {

constexpr real kZeroNormGuard = 1e-12;

// cos(a, b) with d/d b; zero-norm vectors give cos = 0 and no gradient.
real guarded_cosine(const EmbeddingModel::Vector& a, const EmbeddingModel::Vector& b,
                    EmbeddingModel::Vector* d_b) {
  const real na = a.norm();
  const real nb = b.norm();
  if (na < kZeroNormGuard || nb < kZeroNormGuard) {
    if (d_b) d_b->setZero(b.size());
    return 0.0;
  }
  const real cos = std::clamp<real>(a.dot(b) / (na * nb), -1.0, 1.0);
  if (d_b) *d_b = a / (na * nb) - (cos / (nb * nb)) * b;
  return cos;
}

}  // namespace

ClipLossResult clip_losses(const Image& c, const Image& z, const std::string& source_text,
                           const std::string& target_text, const EmbeddingModel& em,
                           Image* d_z_accum) {
  if (source_text.empty() || target_text.empty())
    throw Error::validation("text prompts must be non-empty");

  const EmbeddingModel::Vector e_z = em.embed_image(z);
  const EmbeddingModel::Vector e_c = em.embed_image(c);
  const EmbeddingModel::Vector t_s = em.embed_text(target_text);
  const EmbeddingModel::Vector t_c = em.embed_text(source_text);

  ClipLossResult result;
  EmbeddingModel::Vector d_ez_global, d_ez_dir;

  result.global = 1.0 - guarded_cosine(t_s, e_z, d_z_accum ? &d_ez_global : nullptr);

  const EmbeddingModel::Vector delta_i = e_z - e_c;
  const EmbeddingModel::Vector delta_t = t_s - t_c;
  result.directional = 1.0 - guarded_cosine(delta_t, delta_i, d_z_accum ? &d_ez_dir : nullptr);

  result.total = result.global + result.directional;

  if (d_z_accum) {
    // d(delta_i)/d(e_z) is the identity, so the two gradients add directly.
    const EmbeddingModel::Vector d_ez = -(d_ez_global + d_ez_dir);
    em.embed_image_vjp(z, d_ez, *d_z_accum);
  }
  return result;
}

real edited_view_penalty(const Image& z_edited, const Image& s_edited, Image* d_z_accum) {
  if (!z_edited.same_shape(s_edited))
    throw Error::validation("edited view and its target must have the same shape");
  const real inv_n = 1.0 / static_cast<real>(z_edited.size());
  real loss = 0.0;
  if (d_z_accum && d_z_accum->empty())
    *d_z_accum = Image(z_edited.channels(), z_edited.height(), z_edited.width());
  for (std::size_t i = 0; i < z_edited.size(); ++i) {
    const real d = s_edited.data()[i] - z_edited.data()[i];
    loss += d * d * inv_n;
    if (d_z_accum) d_z_accum->data()[i] += -2.0 * d * inv_n;
  }
  return loss;
}

LossBreakdown total_loss(const LossValues& values, const LossWeights& weights, int epoch) {
  weights.validate();
  const auto check = [](const char* name, real v) {
    if (!std::isfinite(v))
      throw Error::numeric(fmt::format("loss term '{}' is not finite ({})", name, v));
  };
  check("content", values.content);
  check("photorealism", values.photorealism);
  check("global_style", values.global_style);
  check("clip", values.clip);
  check("local_style", values.local_style);
  if (values.edited) check("edited", *values.edited);

  const real pht_weight = epoch < weights.photorealism_warmup_epochs ? 0.0 : weights.photorealism;

  LossBreakdown out;
  out.terms.emplace_back("content", weights.content * values.content);
  out.terms.emplace_back("photorealism", pht_weight * values.photorealism);
  out.terms.emplace_back("global_style", weights.global_style * values.global_style);
  out.terms.emplace_back("clip", weights.text * values.clip);
  out.terms.emplace_back("local_style", weights.local_style * values.local_style);
  if (values.edited) out.terms.emplace_back("edited", weights.edited * *values.edited);

  real total = 0.0;
  for (const auto& [name, value] : out.terms) total += value;
  out.total = total;
  return out;
}

}  // namespace citytex
