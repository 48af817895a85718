/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/fixture.hpp"
#include "citytex/matting.hpp"
#include "citytex/rasterizer.hpp"
#include "citytex/view_planner.hpp"

#include <benchmark/benchmark.h>

using namespace citytex;

static void BM_Rasterize(benchmark::State& state) {
  static const CubeCity city = make_cube_city({3, 256, 512, 1});
  static const ViewPlan plan = plan_pivot_views(city.scene, 5, 3, 0.35, 64, 64, 75.0, 1);
  CameraPose cam = plan.pivots[3];
  cam.width = cam.height = static_cast<int>(state.range(0));
  for (auto _ : state) {
    RenderBuffers buffers = rasterize(city.scene, cam);
    benchmark::DoNotOptimize(buffers.uv.data());
  }
}
BENCHMARK(BM_Rasterize)->Arg(128)->Arg(256)->Arg(512);

static void BM_MattingLaplacian(benchmark::State& state) {
  static const CubeCity city = make_cube_city({3, 256, 512, 1});
  const int res = static_cast<int>(state.range(0));
  const Image small = resize_area(city.scene.texture, res, res);
  for (auto _ : state) {
    MattingLaplacian lap = matting_laplacian(small);
    benchmark::DoNotOptimize(lap.matrix.valuePtr());
  }
}
BENCHMARK(BM_MattingLaplacian)->Arg(64)->Arg(128)->Arg(256);
