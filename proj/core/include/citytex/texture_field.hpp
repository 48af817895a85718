/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace citytex {

// Multi-resolution 2D feature grid (dense at coarse levels, hashed once a
// dense level would exceed the table size) feeding a small MLP decoder with
// a sigmoid output head, so RGB is bounded to (0,1) structurally.
struct FieldConfig {
  int levels = 16;
  int base_resolution = 16;
  real growth = 1.5;
  int features_per_level = 2;
  int table_log2 = 17;
  int hidden_width = 64;
  int hidden_layers = 2;
  std::uint64_t init_seed = 1234;
  // Default budget: half the raw bytes of a 4096^2 RGB8 texture.
  std::size_t max_param_bytes = std::size_t(4096) * 4096 * 3 / 2;
};

struct DistillationConfig {
  int batch_size = 4096;
  int steps = 4000;
  real target_psnr = 30.0;  // dB; stop early once reached on the eval grid
  int eval_interval = 250;
  std::uint64_t seed = 99;

  void validate() const;
};

struct DistillationReport {
  real achieved_psnr = 0.0;  // full texel-center grid, computed at the end
  int steps_run = 0;
  std::vector<std::pair<int, real>> psnr_curve;  // (step, held-out psnr)
};

class NeuralTextureField {
public:
  explicit NeuralTextureField(const FieldConfig& config = FieldConfig{});

  const FieldConfig& config() const { return config_; }

  // Batched query: uvs is 2*count (u,v interleaved, image convention),
  // out_rgb is 3*count. Out-of-domain coordinates are clamped and counted.
  void query(const real* uvs, std::size_t count, real* out_rgb) const;
  std::vector<real> query(const std::vector<real>& uvs) const;

  std::uint64_t clamp_warnings() const { return clamp_warnings_; }

  // Gradient accumulation. backward() re-runs the forward pass internally,
  // so no activation state has to outlive the call.
  void zero_grad();
  void backward(const real* uvs, std::size_t count, const real* d_rgb);

  std::size_t parameter_count() const;
  std::size_t parameter_bytes() const { return parameter_count() * sizeof(real); }

  void save(const std::string& path) const;
  static NeuralTextureField load(const std::string& path);

  // Raw parameter access for the optimizer and checkpointing.
  std::vector<real>& grid_params() { return grid_; }
  const std::vector<real>& grid_params() const { return grid_; }
  std::vector<real>& decoder_params() { return decoder_; }
  const std::vector<real>& decoder_params() const { return decoder_; }
  std::vector<real>& grid_grad() { return grid_grad_; }
  std::vector<real>& decoder_grad() { return decoder_grad_; }
  const std::vector<std::uint32_t>& touched_grid_entries() const { return touched_; }

private:
  struct LevelSpec {
    int resolution;      // grid cells per axis; vertices = resolution + 1
    bool hashed;
    std::size_t offset;  // first feature index in grid_
    std::size_t entries; // number of feature vectors
  };

  struct DecoderSlices;

  void init_params();
  void gather_features(const real* uvs, std::size_t count, real* features) const;
  void scatter_feature_grads(const real* uvs, std::size_t count, const real* d_features);
  std::size_t vertex_index(const LevelSpec& level, int xi, int yi) const;

  FieldConfig config_;
  std::vector<LevelSpec> level_specs_;
  std::size_t grid_entries_ = 0;

  std::vector<real> grid_;
  std::vector<real> decoder_;
  std::vector<real> grid_grad_;
  std::vector<real> decoder_grad_;
  std::vector<std::uint32_t> touched_;       // grid entries with nonzero grad
  std::vector<std::uint32_t> touched_stamp_; // dedup stamps per entry
  std::uint32_t stamp_ = 0;

  mutable std::uint64_t clamp_warnings_ = 0;
};

// Adam with decoupled learning rates for grid and decoder blocks. Grid
// moments update lazily (touched entries only), which is the usual treatment
// for hash-grid parameters.
class FieldOptimizer {
public:
  FieldOptimizer(NeuralTextureField& field, real lr_grid = 1e-2, real lr_decoder = 1e-3);

  void step();

  real lr_grid, lr_decoder;
  real beta1 = 0.9, beta2 = 0.99, epsilon = 1e-10;

  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);

private:
  NeuralTextureField& field_;
  std::int64_t t_ = 0;
  std::vector<real> grid_m_, grid_v_, decoder_m_, decoder_v_;
};

// Regression of the field onto a texture by sampling jittered texel UVs and
// minimizing the squared photometric error. Held-out quality is measured on
// the texel-center grid, which jittered training never hits exactly.
DistillationReport distill(NeuralTextureField& field, const Image& texture,
                           const DistillationConfig& config);

// Evaluates the field on the uniform texel-center grid.
Image bake(const NeuralTextureField& field, int width, int height,
           int max_resolution = 8192);

}  // namespace citytex
