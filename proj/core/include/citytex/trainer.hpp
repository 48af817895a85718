/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/losses.hpp"
#include "citytex/rasterizer.hpp"
#include "citytex/scene.hpp"
#include "citytex/style_bank.hpp"
#include "citytex/texture_field.hpp"
#include "citytex/view_planner.hpp"

#include <optional>
#include <string>
#include <vector>

namespace citytex {

enum class StylizationMode { photorealistic, artistic, edit_propagation };

StylizationMode parse_mode(const std::string& name);
const char* mode_name(StylizationMode mode);

// Weight presets per mode: the artistic preset drops the photorealism
// regularizer and strengthens the style statistics terms; edit propagation
// keeps the photorealistic preset and enables the edited-view penalty.
LossWeights select_mode_weights(StylizationMode mode);

struct EditedView {
  CameraPose camera;
  Image image;
};

struct StylizationConfig {
  StylizationMode mode = StylizationMode::photorealistic;
  int epochs = 20;
  int levels = 5;
  real fov_start_deg = 90.0;
  real fov_end_deg = 20.0;
  int render_width = 512;
  int render_height = 512;
  LossWeights weights;  // fill via select_mode_weights, then override as needed
  std::uint64_t seed = 0;
  int checkpoint_interval_epochs = 1;
  std::optional<EditedView> edited;
  int views_per_level_base = 64;
  std::vector<int> views_per_level;  // optional explicit override
  int pivot_positions = 5;           // P
  int regions = 9;                   // r
  real offset_fraction = 0.35;
  real alpha = 0.25;
  real lr_grid = 1e-2;
  real lr_decoder = 1e-3;
  int laplacian_resolution = 256;
  int descriptor_grid = 16;
  int patches_per_scale = 8;   // 0: bank holds only the full-scale reference
  int patch_feature_resolution = 256;  // patches are resized to this for features
  bool clip_composite_sky = true;
  std::optional<Image> sky_image;  // equirect panorama behind the scene
  std::string checkpoint_dir;     // empty: no checkpoints
  std::string log_path;           // empty: no per-iteration JSONL log
  std::string debug_dump_dir;     // empty: no debug artifacts
  bool dump_buffers = false;       // uv/mask of the first view per epoch
  bool dump_matches = false;       // (view | matched patch) contact sheets

  void validate() const;
  std::vector<int> resolved_views_per_level() const;
};

struct IterationRecord {
  int epoch = 0;
  int level = 0;
  int view = 0;
  int matched_patch = -1;
  LossBreakdown breakdown;
};

struct StylizationReport {
  std::vector<IterationRecord> iterations;
  LocalStyleCounters local_counters;
  int skipped_empty_views = 0;
  real elapsed_seconds = 0.0;
  int epochs_run = 0;
  std::uint64_t field_clamp_warnings = 0;

  std::string to_json() const;
};

// Joint progressive optimization of the texture field over sampled novel
// views. Pass resume_checkpoint to continue a previous run; continuation is
// bit-identical to the uninterrupted run with the same config.
StylizationReport run_stylization(const TexturedScene& scene, const StyleReference& style,
                                  NeuralTextureField& field, const StylizationConfig& config,
                                  const FeatureExtractor& fx, const EmbeddingModel& em,
                                  const std::optional<std::string>& resume_checkpoint =
                                      std::nullopt);

// Trainer checkpoint: counters + rng + optimizer moments + field parameters.
struct TrainState {
  int next_epoch = 0;
  std::int64_t iteration = 0;
  std::string rng_state;
};

void save_train_checkpoint(const std::string& path, const TrainState& state,
                           const NeuralTextureField& field, const FieldOptimizer& opt);
TrainState load_train_checkpoint(const std::string& path, NeuralTextureField& field,
                                 FieldOptimizer& opt);

// Accepts either a bare field checkpoint or a trainer checkpoint (the
// embedded field is extracted), so bake works from any training artifact.
NeuralTextureField load_field_from_any_checkpoint(const std::string& path);

}  // namespace citytex
