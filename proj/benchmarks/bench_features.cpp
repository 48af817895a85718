/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/features.hpp"
#include "citytex/losses.hpp"

#include <benchmark/benchmark.h>

using namespace citytex;

namespace {

Image random_image(int side) {
  Image img(3, side, side);
  Rng rng(1);
  for (real& v : img.data()) v = rng.uniform01();
  return img;
}

}  // namespace

static void BM_BackboneForward(benchmark::State& state) {
  FeatureExtractorConfig cfg;
  cfg.width_scale = static_cast<real>(state.range(1)) / 100.0;
  const FeatureExtractor fx(cfg);
  const Image img = random_image(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto ctx = fx.forward(img, 4, false);
    benchmark::DoNotOptimize(ctx.tap(4).data().data());
  }
}
BENCHMARK(BM_BackboneForward)->Args({128, 25})->Args({128, 100})->Args({256, 25});

static void BM_GlobalStyleLossWithGrad(benchmark::State& state) {
  FeatureExtractorConfig cfg;
  cfg.width_scale = 0.25;
  const FeatureExtractor fx(cfg);
  const Image s = random_image(static_cast<int>(state.range(0)));
  const Image z = random_image(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Image grad;
    benchmark::DoNotOptimize(global_style_loss(s, z, fx, nullptr, &grad));
  }
}
BENCHMARK(BM_GlobalStyleLossWithGrad)->Arg(96)->Arg(128);
