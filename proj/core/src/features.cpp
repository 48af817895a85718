/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/features.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace citytex {

namespace {

// conv layout: (block, convs in block, tap after first conv?).
struct BlockPlan {
  int convs;
  int tap;  // 0 = no tap in this block
};
constexpr std::array<BlockPlan, 4> kBlocks = {{{2, 0}, {2, 2}, {4, 3}, {1, 4}}};

int scaled(int base, real scale) { return std::max(1, static_cast<int>(std::lround(base * scale))); }

}  // namespace

constexpr std::array<int, 3> FeatureExtractor::kStyleTaps;

FeatureExtractor::FeatureExtractor(const FeatureExtractorConfig& config) : config_(config) {
  channels_ = {3, scaled(64, config.width_scale), scaled(128, config.width_scale),
               scaled(256, config.width_scale), scaled(512, config.width_scale)};

  std::size_t offset = 0;
  for (int b = 0; b < 4; ++b) {
    for (int i = 0; i < kBlocks[b].convs; ++i) {
      ConvSpec spec;
      spec.in_ch = i == 0 ? channels_[b] : channels_[b + 1];
      spec.out_ch = channels_[b + 1];
      spec.w_offset = offset;
      offset += static_cast<std::size_t>(spec.out_ch) * spec.in_ch * 9;
      spec.b_offset = offset;
      offset += spec.out_ch;
      spec.tap = i == 0 ? kBlocks[b].tap : 0;
      spec.pool_after = (b < 3) && (i == kBlocks[b].convs - 1);
      convs_.push_back(spec);
    }
  }

  weights_.assign(offset, 0.0);
  Rng rng(config.init_seed);
  for (const ConvSpec& spec : convs_) {
    const real stddev = std::sqrt(2.0 / (spec.in_ch * 9));
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.out_ch) * spec.in_ch * 9; ++i)
      weights_[spec.w_offset + i] = rng.normal() * stddev;
    // biases stay zero
  }
}

int FeatureExtractor::tap_channels(int tap) const {
  switch (tap) {
    case 2: return channels_[2];
    case 3: return channels_[3];
    case 4: return channels_[4];
    default: throw Error::validation(fmt::format("no feature tap {}", tap));
  }
}

int FeatureExtractor::tap_stride(int tap) {
  switch (tap) {
    case 2: return 2;
    case 3: return 4;
    case 4: return 8;
    default: throw Error::validation(fmt::format("no feature tap {}", tap));
  }
}

void FeatureExtractor::conv_forward(const ConvSpec& spec, const Image& in, Image& out) const {
  const int H = in.height();
  const int W = in.width();
  out = Image(spec.out_ch, H, W);
  const real* weights = weights_.data() + spec.w_offset;
  const real* bias = weights_.data() + spec.b_offset;
  for (int co = 0; co < spec.out_ch; ++co) {
    real* op = out.plane(co);
    const real b = bias[co];
    for (std::size_t i = 0; i < out.plane_size(); ++i) op[i] = b;
    for (int ci = 0; ci < spec.in_ch; ++ci) {
      const real* ip = in.plane(ci);
      const real* w = weights + (static_cast<std::size_t>(co) * spec.in_ch + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int ys = std::max(0, -dy);
        const int ye = std::min(H, H - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const real wv = w[ky * 3 + kx];
          if (wv == 0.0) continue;
          const int xs = std::max(0, -dx);
          const int xe = std::min(W, W - dx);
          for (int y = ys; y < ye; ++y) {
            real* orow = op + static_cast<std::size_t>(y) * W;
            const real* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
            for (int x = xs; x < xe; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

void FeatureExtractor::conv_backward_input(const ConvSpec& spec, const Image& d_out,
                                           Image& d_in) const {
  const int H = d_out.height();
  const int W = d_out.width();
  d_in = Image(spec.in_ch, H, W);
  const real* weights = weights_.data() + spec.w_offset;
  for (int ci = 0; ci < spec.in_ch; ++ci) {
    real* dip = d_in.plane(ci);
    for (int co = 0; co < spec.out_ch; ++co) {
      const real* dop = d_out.plane(co);
      const real* w = weights + (static_cast<std::size_t>(co) * spec.in_ch + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int ys = std::max(0, -dy);
        const int ye = std::min(H, H - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const real wv = w[ky * 3 + kx];
          if (wv == 0.0) continue;
          const int xs = std::max(0, -dx);
          const int xe = std::min(W, W - dx);
          for (int y = ys; y < ye; ++y) {
            real* drow = dip + static_cast<std::size_t>(y + dy) * W + dx;
            const real* orow = dop + static_cast<std::size_t>(y) * W;
            for (int x = xs; x < xe; ++x) drow[x] += wv * orow[x];
          }
        }
      }
    }
  }
}

namespace {

Image max_pool(const Image& in, std::vector<std::uint8_t>* argmax) {
  const int H = in.height() / 2;
  const int W = in.width() / 2;
  if (H < 1 || W < 1)
    throw Error::validation(
        fmt::format("feature map {}x{} too small to pool; use a shallower tap or larger input",
                    in.height(), in.width()));
  Image out(in.channels(), H, W);
  argmax->assign(out.size(), 0);
  for (int c = 0; c < in.channels(); ++c) {
    const real* ip = in.plane(c);
    real* op = out.plane(c);
    std::uint8_t* am = argmax->data() + static_cast<std::size_t>(c) * out.plane_size();
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::size_t base = static_cast<std::size_t>(2 * y) * in.width() + 2 * x;
        const real v[4] = {ip[base], ip[base + 1], ip[base + in.width()],
                           ip[base + in.width() + 1]};
        int best = 0;
        for (int k = 1; k < 4; ++k)
          if (v[k] > v[best]) best = k;
        op[static_cast<std::size_t>(y) * W + x] = v[best];
        am[static_cast<std::size_t>(y) * W + x] = static_cast<std::uint8_t>(best);
      }
    }
  }
  return out;
}

void max_pool_backward(const Image& d_out, const std::vector<std::uint8_t>& argmax,
                       int in_height, int in_width, Image& d_in) {
  d_in = Image(d_out.channels(), in_height, in_width);
  const int H = d_out.height();
  const int W = d_out.width();
  for (int c = 0; c < d_out.channels(); ++c) {
    const real* dop = d_out.plane(c);
    real* dip = d_in.plane(c);
    const std::uint8_t* am = argmax.data() + static_cast<std::size_t>(c) * d_out.plane_size();
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::size_t o = static_cast<std::size_t>(y) * W + x;
        const int k = am[o];
        const std::size_t base =
            static_cast<std::size_t>(2 * y + k / 2) * in_width + 2 * x + (k % 2);
        dip[base] += dop[o];
      }
    }
  }
}

}  // namespace

FeatureExtractor::Context FeatureExtractor::forward(const Image& rgb, int max_tap,
                                                    bool retain_state) const {
  if (rgb.channels() != 3) throw Error::validation("feature extractor expects an RGB image");
  if (max_tap < 2 || max_tap > 4) throw Error::validation("max_tap must be 2, 3 or 4");

  Context ctx;
  ctx.max_tap = max_tap;
  ctx.retained = retain_state;
  ctx.input_height = rgb.height();
  ctx.input_width = rgb.width();

  Image cur(3, rgb.height(), rgb.width());
  for (int c = 0; c < 3; ++c) {
    const real* ip = rgb.plane(c);
    real* op = cur.plane(c);
    const real mean = config_.input_mean[c];
    const real inv_std = 1.0 / config_.input_std[c];
    for (std::size_t i = 0; i < cur.plane_size(); ++i) op[i] = (ip[i] - mean) * inv_std;
  }

  for (const ConvSpec& spec : convs_) {
    Image out;
    conv_forward(spec, cur, out);
    for (real& v : out.data()) v = v > 0.0 ? v : 0.0;  // ReLU
    if (retain_state) ctx.relu_outputs.push_back(out);

    if (spec.tap != 0) ctx.taps[spec.tap] = out;
    if (spec.tap == max_tap) return ctx;

    if (spec.pool_after) {
      std::vector<std::uint8_t> argmax;
      cur = max_pool(out, &argmax);
      if (retain_state) ctx.pool_argmax.push_back(std::move(argmax));
    } else {
      cur = std::move(out);
    }
  }
  return ctx;
}

Image FeatureExtractor::backward(const Context& ctx, const std::map<int, Image>& d_taps) const {
  if (!ctx.retained)
    throw Error::validation("backward requires a context created with retain_state=true");
  for (const auto& [tap, grad] : d_taps) {
    if (!ctx.taps.count(tap))
      throw Error::validation(fmt::format("gradient provided for tap {} not in the context", tap));
    if (!grad.same_shape(ctx.taps.at(tap)))
      throw Error::validation(fmt::format("gradient shape mismatch at tap {}", tap));
  }

  const int n_layers = static_cast<int>(ctx.relu_outputs.size());
  int pool_idx = static_cast<int>(ctx.pool_argmax.size());

  Image g;  // gradient w.r.t. the current layer's ReLU output
  for (int li = n_layers - 1; li >= 0; --li) {
    const ConvSpec& spec = convs_[li];
    const Image& relu_out = ctx.relu_outputs[li];

    if (li < n_layers - 1 && spec.pool_after) {
      // g currently lives after the pool; push it back through.
      --pool_idx;
      Image d_pool_in;
      max_pool_backward(g, ctx.pool_argmax[pool_idx], relu_out.height(), relu_out.width(),
                        d_pool_in);
      g = std::move(d_pool_in);
    }
    if (g.empty()) g = Image(relu_out.channels(), relu_out.height(), relu_out.width());

    if (spec.tap != 0) {
      const auto it = d_taps.find(spec.tap);
      if (it != d_taps.end())
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += it->second.data()[i];
    }

    // ReLU backward, then conv backward w.r.t. the conv input.
    for (std::size_t i = 0; i < g.size(); ++i)
      if (relu_out.data()[i] <= 0.0) g.data()[i] = 0.0;
    Image d_in;
    conv_backward_input(spec, g, d_in);
    g = std::move(d_in);
  }

  // Undo the input normalization scaling.
  Image d_image(3, ctx.input_height, ctx.input_width);
  for (int c = 0; c < 3; ++c) {
    const real inv_std = 1.0 / config_.input_std[c];
    const real* gp = g.plane(c);
    real* dp = d_image.plane(c);
    for (std::size_t i = 0; i < d_image.plane_size(); ++i) dp[i] = gp[i] * inv_std;
  }
  return d_image;
}

void FeatureExtractor::save_weights(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error::io("cannot open weight file for writing: " + path);
  const char magic[8] = {'C', 'T', 'X', 'W', 'G', 'T', '0', '1'};
  os.write(magic, 8);
  const std::uint32_t n_convs = static_cast<std::uint32_t>(convs_.size());
  os.write(reinterpret_cast<const char*>(&n_convs), 4);
  for (const ConvSpec& spec : convs_) {
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(spec.in_ch),
                                   static_cast<std::uint32_t>(spec.out_ch)};
    os.write(reinterpret_cast<const char*>(dims), 8);
  }
  os.write(reinterpret_cast<const char*>(weights_.data()),
           static_cast<std::streamsize>(weights_.size() * sizeof(real)));
  if (!os) throw Error::io("failed writing weights: " + path);
}

void FeatureExtractor::load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error::io("cannot open weight file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "CTXWGT01", 8) != 0)
    throw Error::io("not a backbone weight file: " + path);
  std::uint32_t n_convs = 0;
  is.read(reinterpret_cast<char*>(&n_convs), 4);
  if (n_convs != convs_.size())
    throw Error::io(fmt::format("weight file has {} conv layers, extractor expects {}", n_convs,
                                convs_.size()));
  for (const ConvSpec& spec : convs_) {
    std::uint32_t dims[2];
    is.read(reinterpret_cast<char*>(dims), 8);
    if (!is || dims[0] != static_cast<std::uint32_t>(spec.in_ch) ||
        dims[1] != static_cast<std::uint32_t>(spec.out_ch))
      throw Error::io("weight file layer shapes do not match the configured width");
  }
  is.read(reinterpret_cast<char*>(weights_.data()),
          static_cast<std::streamsize>(weights_.size() * sizeof(real)));
  if (!is) throw Error::io("weight file truncated: " + path);
}

}  // namespace citytex
