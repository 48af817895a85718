/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace citytex {

// Gradients w.r.t. backbone feature taps, keyed by tap id; accumulated
// across losses and pushed through the backbone once.
using TapGradients = std::map<int, Image>;

// Frozen convolutional backbone in the 19-layer classification family:
// 3x3 convs with ReLU, 2x2 max pooling between blocks. Feature taps sit at
// the ReLU output of the first conv of blocks 2, 3 and 4 (the deepest tap,
// 4, doubles as the content layer).
//
// Weights are deterministic seeded random by default (He init) and can be
// replaced from a weight file for users who convert a pretrained backbone.
// Random frozen filters keep every loss in this project well-defined; only
// the aesthetics of a full-scale run depend on pretrained weights.
struct FeatureExtractorConfig {
  real width_scale = 1.0;  // scales the 64/128/256/512 channel plan
  std::uint64_t init_seed = 205;
  std::array<real, 3> input_mean = {0.485, 0.456, 0.406};
  std::array<real, 3> input_std = {0.229, 0.224, 0.225};
};

class FeatureExtractor {
public:
  static constexpr int kContentTap = 4;
  static constexpr std::array<int, 3> kStyleTaps = {2, 3, 4};
  static constexpr int kStructureTap = 3;

  // Holds tap outputs plus whatever intermediate state backward() needs.
  struct Context {
    std::map<int, Image> taps;
    int max_tap = 0;
    bool retained = false;

    const Image& tap(int t) const { return taps.at(t); }

  private:
    friend class FeatureExtractor;
    std::vector<Image> relu_outputs;          // per conv layer
    std::vector<std::vector<std::uint8_t>> pool_argmax;  // per pool layer
    int input_height = 0, input_width = 0;
  };

  explicit FeatureExtractor(const FeatureExtractorConfig& config = {});

  const FeatureExtractorConfig& config() const { return config_; }
  int tap_channels(int tap) const;
  // Spatial downscale factor of a tap relative to the input.
  static int tap_stride(int tap);

  // retain_state must be true when backward() will be called later.
  Context forward(const Image& rgb, int max_tap = kContentTap,
                  bool retain_state = false) const;

  // d(loss)/d(input image) from per-tap feature gradients. Maps may cover
  // any subset of the taps computed in `ctx`.
  Image backward(const Context& ctx, const std::map<int, Image>& d_taps) const;

  void save_weights(const std::string& path) const;
  void load_weights(const std::string& path);

  std::size_t parameter_count() const { return weights_.size(); }

private:
  struct ConvSpec {
    int in_ch, out_ch;
    std::size_t w_offset, b_offset;
    int tap = 0;          // nonzero when a tap follows this conv's ReLU
    bool pool_after = false;
  };

  void conv_forward(const ConvSpec& spec, const Image& in, Image& out) const;
  void conv_backward_input(const ConvSpec& spec, const Image& d_out, Image& d_in) const;

  FeatureExtractorConfig config_;
  std::vector<ConvSpec> convs_;
  std::vector<real> weights_;
  std::array<int, 5> channels_;  // input + per-block widths
};

}  // namespace citytex
