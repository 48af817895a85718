/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/features.hpp"
#include "citytex/texture_field.hpp"
#include "citytex/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace citytex {

// Everything a pipeline run needs, parsed from one JSON config file.
// Strings support ${ENV_VAR} interpolation; unknown keys, wrong types and
// out-of-range values are config errors before any work starts. The schema
// is documented in docs/config.md.
struct RunConfig {
  // scene
  std::string mesh_path;
  std::string texture_path;
  std::optional<std::string> semantics_path;

  // style
  std::string style_image_path;
  std::optional<std::string> style_segmentation_path;
  std::string source_text = "a photo of a city in the day";
  std::string target_text;

  std::string mode = "photorealistic";
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  StylizationConfig stylization;  // weights filled from mode, then overridden
  bool has_weight_overrides = false;

  FieldConfig field;
  DistillationConfig distill;

  real feature_width_scale = 1.0;
  std::uint64_t feature_seed = 205;
  std::optional<std::string> feature_weights_path;

  std::string embedding_backend = "procedural";
  int embedding_dim = 64;
  std::uint64_t embedding_seed = 31;

  std::string sky_backend = "toy";
  int sky_height = 1024;
  int sky_steps = 50;
  real sky_guidance_weight = 0.1;
  int sky_guidance_interval = 5;
  int sky_windows = 26;
  int sky_cubemap_face_size = 0;  // 0 = no cubemap export

  std::optional<std::string> edit_image_path;
  std::optional<CameraPose> edit_camera;

  bool dump_buffers = false;
  bool dump_matches = false;

  void validate() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_json(const std::string& json_text);

// Environment interpolation used for config strings: "${VAR}" becomes the
// variable's value; an unset variable is a config error.
std::string interpolate_env(const std::string& value);

struct ManifestOutput {
  std::string name;
  std::string path;
  bool hashed = true;  // reports with wall-clock fields are listed unhashed
};

// Deterministic run manifest: tool version, subcommand, canonical config,
// input hashes and output hashes. No timestamps, so identical runs produce
// byte-identical manifests.
void write_manifest(const std::string& path, const std::string& subcommand,
                    const std::string& config_json_canonical,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<ManifestOutput>& outputs);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace citytex
