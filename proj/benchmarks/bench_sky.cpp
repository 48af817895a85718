/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/sky.hpp"

#include <benchmark/benchmark.h>

using namespace citytex;

static void BM_JointDenoiseStep(benchmark::State& state) {
  EquirectCanvas canvas;
  const int h = static_cast<int>(state.range(0));
  canvas.latent = Image(3, h, 2 * h, 0.5);
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  const ToyDenoiser backend(1);
  for (auto _ : state) {
    joint_denoise_step(canvas, windows, backend, 0, "prompt");
    benchmark::DoNotOptimize(canvas.latent.data().data());
  }
}
BENCHMARK(BM_JointDenoiseStep)->Arg(64)->Arg(128);

static void BM_EquirectGather(benchmark::State& state) {
  Image canvas(3, 128, 256, 0.5);
  BFoVWindow window{35.0, 15.0, 90.0, static_cast<int>(state.range(0))};
  for (auto _ : state) {
    Image tile = warp_equirect_to_perspective(canvas, window);
    benchmark::DoNotOptimize(tile.data().data());
  }
}
BENCHMARK(BM_EquirectGather)->Arg(64)->Arg(96);
