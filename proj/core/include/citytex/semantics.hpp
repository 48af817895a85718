/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"

#include <optional>
#include <string>
#include <vector>

namespace citytex {

struct TexturedScene;
struct CameraPose;

// The fixed label set for architectural scenes plus the ancestor graph used
// to substitute missing style classes. The graph is rooted at "sky": every
// class eventually inherits the ambient illumination of the sky, with
// street-level elements routed through "road" and facade elements through
// "building" first.
class SemanticClassSet {
public:
  static SemanticClassSet urban();

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& name(int index) const;
  int index(const std::string& label) const;  // throws on unknown label
  std::optional<int> parent(int index) const;
  int root() const { return root_; }

  // Checks the hierarchy is acyclic and every label reaches the root.
  void validate() const;

private:
  std::vector<std::string> labels_;
  std::vector<int> parents_;  // -1 for root
  int root_ = 0;
};

// Nearest ancestor of `missing` that appears in `available` (the root "sky"
// included). Throws Error::validation when no ancestor is available at all.
std::string rematch_class(const std::string& missing, const std::vector<std::string>& available,
                          const SemanticClassSet& classes);
int rematch_class_index(int missing, const std::vector<bool>& available,
                        const SemanticClassSet& classes);

struct LabeledView {
  CameraPose const* camera;
  LabelImage labels;
};

// Projects per-view label images onto the texture atlas through rasterized
// UV correspondences and majority-votes per texel. Ties break toward the
// smallest class index; texels visible in no view stay unlabeled.
LabelImage bake_semantics(const TexturedScene& scene,
                          const std::vector<std::pair<CameraPose, LabelImage>>& labeled_views,
                          const SemanticClassSet& classes);

}  // namespace citytex
