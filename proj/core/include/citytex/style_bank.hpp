/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/features.hpp"
#include "citytex/image.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace citytex {

// Style exemplar: image, its segmentation over the urban class set, and the
// source/target text prompts steering the text-embedding losses.
struct StyleReference {
  Image image;
  LabelImage segmentation;
  std::string source_text;
  std::string target_text;

  void validate() const;
};

inline constexpr int kMinPatchSide = 256;

// Pairwise cosine similarities between spatial feature vectors after
// resizing the map to a fixed grid, so descriptors of differently sized
// images stay comparable.
struct StructureDescriptor {
  int grid = 0;  // spatial side; matrix is (grid^2) x (grid^2)
  Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic> similarity;
};

struct StylePatch {
  int x = 0, y = 0, w = 0, h = 0;  // crop rectangle in source pixels
  Image image;
  LabelImage segmentation;
  int scale_tag = 0;
  StructureDescriptor descriptor;
};

struct PatchBank {
  std::vector<StylePatch> patches;
  bool empty() const { return patches.empty(); }
};

StructureDescriptor self_similarity(const Image& feature_map, int downsample_to = 16);
real descriptor_distance(const StructureDescriptor& a, const StructureDescriptor& b);

StructureDescriptor view_descriptor(const Image& rgb, const FeatureExtractor& fx,
                                    int descriptor_grid = 16);

// Random square crops at each requested scale plus the full image as the
// fallback reference; exact duplicate rectangles are dropped. Descriptors
// are precomputed and cached on the patches. feature_resolution > 0 resizes
// crops to that side before the backbone runs (descriptors live on a fixed
// grid anyway, and statistics are resolution-robust); 0 keeps native size.
PatchBank build_patch_bank(const StyleReference& style, const std::vector<int>& scales,
                           int n_per_scale, Rng& rng, const FeatureExtractor& fx,
                           int descriptor_grid = 16, int feature_resolution = 0);

// Argmin of descriptor distance; ties keep the lowest patch index.
int match_patch_index(const StructureDescriptor& view, const PatchBank& bank);
const StylePatch& match_patch(const Image& view, const PatchBank& bank,
                              const FeatureExtractor& fx, int descriptor_grid = 16);

// Crop sides for a progressive level: earlier (wide-fov) levels prefer
// large crops, later levels smaller ones, never below kMinPatchSide.
std::vector<int> scales_for_level(int level, int levels, int source_min_side);

}  // namespace citytex
