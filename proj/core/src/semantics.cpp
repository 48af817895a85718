/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/semantics.hpp"

#include "citytex/rasterizer.hpp"
#include "citytex/scene.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace citytex {

SemanticClassSet SemanticClassSet::urban() {
  SemanticClassSet s;
  s.labels_ = {"sky", "building", "window", "road", "person", "plant", "car", "water", "lights"};
  auto idx = [&s](const char* name) {
    return static_cast<int>(std::find(s.labels_.begin(), s.labels_.end(), name) -
                            s.labels_.begin());
  };
  s.parents_.assign(s.labels_.size(), -1);
  s.parents_[idx("building")] = idx("sky");
  s.parents_[idx("window")] = idx("building");
  s.parents_[idx("road")] = idx("sky");
  s.parents_[idx("person")] = idx("road");
  s.parents_[idx("plant")] = idx("road");
  s.parents_[idx("car")] = idx("road");
  s.parents_[idx("water")] = idx("sky");
  s.parents_[idx("lights")] = idx("building");
  s.root_ = idx("sky");
  s.validate();
  return s;
}

const std::string& SemanticClassSet::name(int index) const {
  if (index < 0 || index >= size())
    throw Error::validation(fmt::format("class index {} out of range", index));
  return labels_[index];
}

int SemanticClassSet::index(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw Error::validation("unknown class label: " + label);
  return static_cast<int>(it - labels_.begin());
}

std::optional<int> SemanticClassSet::parent(int index) const {
  if (index < 0 || index >= size())
    throw Error::validation(fmt::format("class index {} out of range", index));
  if (parents_[index] < 0) return std::nullopt;
  return parents_[index];
}

void SemanticClassSet::validate() const {
  if (parents_.size() != labels_.size())
    throw Error::validation("class hierarchy size mismatch");
  if (parents_[root_] != -1) throw Error::validation("hierarchy root must have no parent");
  for (int i = 0; i < size(); ++i) {
    int cur = i;
    int hops = 0;
    while (parents_[cur] >= 0) {
      cur = parents_[cur];
      if (++hops > size()) throw Error::validation("class hierarchy contains a cycle");
    }
    if (cur != root_)
      throw Error::validation(fmt::format("class '{}' does not reach the root", labels_[i]));
  }
}

int rematch_class_index(int missing, const std::vector<bool>& available,
                        const SemanticClassSet& classes) {
  int cur = missing;
  while (true) {
    const auto p = classes.parent(cur);
    if (!p) break;
    cur = *p;
    if (available[cur]) return cur;
  }
  throw Error::validation(fmt::format(
      "no ancestor of class '{}' is present in the available reference classes",
      classes.name(missing)));
}

std::string rematch_class(const std::string& missing, const std::vector<std::string>& available,
                          const SemanticClassSet& classes) {
  std::vector<bool> avail(classes.size(), false);
  for (const std::string& a : available) avail[classes.index(a)] = true;
  const int m = classes.index(missing);
  if (avail[m])
    throw Error::validation(fmt::format("class '{}' is already available; nothing to re-match",
                                        missing));
  return classes.name(rematch_class_index(m, avail, classes));
}

LabelImage bake_semantics(const TexturedScene& scene,
                          const std::vector<std::pair<CameraPose, LabelImage>>& labeled_views,
                          const SemanticClassSet& classes) {
  if (labeled_views.empty()) throw Error::validation("bake_semantics requires at least one view");

  const int tw = scene.texture.width();
  const int th = scene.texture.height();
  const int n_classes = classes.size();
  std::vector<std::uint32_t> votes(static_cast<std::size_t>(tw) * th * n_classes, 0);

  for (const auto& [camera, labels] : labeled_views) {
    if (labels.width != camera.width || labels.height != camera.height)
      throw Error::validation(
          fmt::format("label image {}x{} does not match camera resolution {}x{}", labels.width,
                      labels.height, camera.width, camera.height));
    const RenderBuffers buffers = rasterize(scene, camera);
    for (int y = 0; y < buffers.height; ++y) {
      for (int x = 0; x < buffers.width; ++x) {
        if (!buffers.fg_at(y, x)) continue;
        const std::int16_t label = labels.at(y, x);
        if (label == LabelImage::kUnlabeled) continue;
        if (label < 0 || label >= n_classes)
          throw Error::validation(fmt::format("view label {} outside the class set", label));
        const std::size_t px = (static_cast<std::size_t>(y) * buffers.width + x) * 2;
        const real u = buffers.uv[px];
        const real v = tex_v_from_mesh_v(buffers.uv[px + 1]);
        const int tx = std::clamp(static_cast<int>(u * tw), 0, tw - 1);
        const int ty = std::clamp(static_cast<int>(v * th), 0, th - 1);
        ++votes[(static_cast<std::size_t>(ty) * tw + tx) * n_classes + label];
      }
    }
  }

  LabelImage out(th, tw);
  for (std::size_t t = 0; t < static_cast<std::size_t>(tw) * th; ++t) {
    const std::uint32_t* v = votes.data() + t * n_classes;
    std::uint32_t best = 0;
    int best_class = LabelImage::kUnlabeled;
    for (int c = 0; c < n_classes; ++c) {
      if (v[c] > best) {  // strict: ties keep the smaller class index
        best = v[c];
        best_class = c;
      }
    }
    out.labels[t] = static_cast<std::int16_t>(best_class);
  }
  return out;
}

}  // namespace citytex
