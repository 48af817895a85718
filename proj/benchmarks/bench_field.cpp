/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/texture_field.hpp"

#include <benchmark/benchmark.h>

using namespace citytex;

namespace {

NeuralTextureField& shared_field() {
  static NeuralTextureField field{FieldConfig{}};
  return field;
}

std::vector<real> random_uvs(std::size_t count) {
  Rng rng(1);
  std::vector<real> uvs(2 * count);
  for (real& v : uvs) v = rng.uniform01();
  return uvs;
}

}  // namespace

static void BM_FieldQuery(benchmark::State& state) {
  NeuralTextureField& field = shared_field();
  const std::size_t batch = state.range(0);
  const std::vector<real> uvs = random_uvs(batch);
  std::vector<real> rgb(3 * batch);
  for (auto _ : state) {
    field.query(uvs.data(), batch, rgb.data());
    benchmark::DoNotOptimize(rgb.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_FieldQuery)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_FieldBackward(benchmark::State& state) {
  NeuralTextureField& field = shared_field();
  const std::size_t batch = state.range(0);
  const std::vector<real> uvs = random_uvs(batch);
  std::vector<real> d_rgb(3 * batch, 1e-3);
  for (auto _ : state) {
    field.zero_grad();
    field.backward(uvs.data(), batch, d_rgb.data());
    benchmark::DoNotOptimize(field.grid_grad().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_FieldBackward)->Arg(1024)->Arg(4096);

static void BM_Bake(benchmark::State& state) {
  NeuralTextureField& field = shared_field();
  const int side = state.range(0);
  for (auto _ : state) {
    Image baked = bake(field, side, side);
    benchmark::DoNotOptimize(baked.data().data());
  }
}
BENCHMARK(BM_Bake)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
