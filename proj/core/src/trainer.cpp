/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/trainer.hpp"

#include "citytex/image_io.hpp"
#include "citytex/metrics.hpp"
#include "citytex/sky.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace citytex {

namespace fs = std::filesystem;
using nlohmann::json;

StylizationMode parse_mode(const std::string& name) {
  if (name == "photorealistic") return StylizationMode::photorealistic;
  if (name == "artistic") return StylizationMode::artistic;
  if (name == "edit_propagation" || name == "edit-propagation")
    return StylizationMode::edit_propagation;
  throw Error::config("unknown stylization mode: " + name);
}

const char* mode_name(StylizationMode mode) {
  switch (mode) {
    case StylizationMode::photorealistic: return "photorealistic";
    case StylizationMode::artistic: return "artistic";
    case StylizationMode::edit_propagation: return "edit_propagation";
  }
  return "?";
}

LossWeights select_mode_weights(StylizationMode mode) {
  LossWeights w;  // photorealistic defaults
  switch (mode) {
    case StylizationMode::photorealistic:
      break;
    case StylizationMode::artistic:
      w.photorealism = 0.0;
      w.global_style = 10.0;
      w.local_style = 1.0;
      break;
    case StylizationMode::edit_propagation:
      w.edited = 1.0;
      break;
  }
  return w;
}

void StylizationConfig::validate() const {
  if (epochs < 1) throw Error::config("epochs must be >= 1");
  if (levels < 1 || levels > epochs)
    throw Error::config("levels must be in [1, epochs] so every level gets at least one epoch");
  if (render_width < 1 || render_height < 1) throw Error::config("render resolution invalid");
  weights.validate();
  if (mode == StylizationMode::edit_propagation) {
    if (!edited) throw Error::config("edit propagation requires an edited view");
    if (weights.edited <= 0.0)
      throw Error::config("edit propagation requires a positive edited-view weight");
    if (edited->image.height() != edited->camera.height ||
        edited->image.width() != edited->camera.width)
      throw Error::config("edited image must match the edited camera resolution");
  }
  if (!views_per_level.empty() && static_cast<int>(views_per_level.size()) != levels)
    throw Error::config("views_per_level must have one entry per level");
  if (pivot_positions < 1 || regions < 1) throw Error::config("P and r must be >= 1");
  if (laplacian_resolution < 3) throw Error::config("laplacian resolution too small");
}

std::vector<int> StylizationConfig::resolved_views_per_level() const {
  if (!views_per_level.empty()) return views_per_level;
  std::vector<int> out(levels);
  for (int l = 0; l < levels; ++l) out[l] = views_per_level_base << l;
  return out;
}

namespace {

// Side-by-side (view | matched patch) image for debugging scale matching.
Image match_contact_sheet(const Image& view, const Image& patch) {
  const Image patch_resized =
      resize_bilinear(patch, view.height(),
                      std::max(1, patch.width() * view.height() / patch.height()));
  Image sheet(3, view.height(), view.width() + 2 + patch_resized.width());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < view.height(); ++y) {
      for (int x = 0; x < view.width(); ++x) sheet.at(c, y, x) = view.at(c, y, x);
      for (int x = 0; x < patch_resized.width(); ++x)
        sheet.at(c, y, view.width() + 2 + x) = patch_resized.at(c, y, x);
    }
  return sheet;
}

std::vector<std::uint8_t> fg_mask_of(const RenderBuffers& buffers) {
  std::vector<std::uint8_t> mask(buffers.pixel_count());
  std::copy(buffers.fg.begin(), buffers.fg.end(), mask.begin());
  return mask;
}

// Replaces background pixels with the sky panorama sampled along each
// pixel's ray. Used for the text-embedding losses only.
Image composite_sky(const Image& view, const RenderBuffers& buffers, const CameraPose& pose,
                    const Image& sky) {
  Image out = view;
  for (int y = 0; y < view.height(); ++y) {
    for (int x = 0; x < view.width(); ++x) {
      if (buffers.fg_at(y, x)) continue;
      const Vec3 dir = ray_direction(pose, x + 0.5, y + 0.5);
      const real lon = std::atan2(dir.x(), dir.z());
      const real lat = std::asin(std::clamp<real>(dir.y(), -1.0, 1.0));
      const real u = (lon + kPi) / (2.0 * kPi);
      const real v = (kPi / 2.0 - lat) / kPi;
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = sample_bilinear(sky, c, u, v);
    }
  }
  return out;
}

// Labels used by the losses: rendered semantics with unlabeled foreground
// texels treated as "building" (the dominant urban class).
LabelImage loss_labels(const RenderBuffers& buffers, const LabelImage& rendered,
                       std::int16_t building_index) {
  LabelImage out = rendered;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (buffers.fg_at(y, x) && out.at(y, x) == LabelImage::kUnlabeled)
        out.at(y, x) = building_index;
  return out;
}

void audit_background_zero(const Image& c, const Image& z, const RenderBuffers& buffers) {
  for (int y = 0; y < c.height(); ++y)
    for (int x = 0; x < c.width(); ++x) {
      if (buffers.fg_at(y, x)) continue;
      for (int ch = 0; ch < 3; ++ch)
        if (c.at(ch, y, x) != 0.0 || z.at(ch, y, x) != 0.0)
          throw Error::numeric("background audit failed: non-zero pixel outside the mask");
    }
}

struct EpochPatchCache {
  // Feature contexts of bank patches at the working feature resolution.
  std::map<int, FeatureExtractor::Context> contexts;
  std::map<int, Image> resized_images;

  const FeatureExtractor::Context& context(int idx, const PatchBank& bank,
                                           const FeatureExtractor& fx, int feature_resolution) {
    auto it = contexts.find(idx);
    if (it != contexts.end()) return it->second;
    const StylePatch& patch = bank.patches[idx];
    Image img = patch.image;
    if (feature_resolution > 0 &&
        (img.height() != feature_resolution || img.width() != feature_resolution))
      img = resize_bilinear(img, feature_resolution, feature_resolution);
    resized_images[idx] = img;
    auto [pos, ok] = contexts.emplace(
        idx, fx.forward(resized_images[idx], FeatureExtractor::kContentTap, false));
    return pos->second;
  }
};

}  // namespace

std::string StylizationReport::to_json() const {
  json doc;
  doc["elapsed_seconds"] = elapsed_seconds;
  doc["epochs_run"] = epochs_run;
  doc["skipped_empty_views"] = skipped_empty_views;
  doc["field_clamp_warnings"] = field_clamp_warnings;
  doc["local_style"] = {{"no_reference", local_counters.no_reference},
                        {"rematched", local_counters.rematched},
                        {"skipped_small", local_counters.skipped_small}};
  json iters = json::array();
  for (const IterationRecord& it : iterations) {
    json terms = json::object();
    for (const auto& [name, value] : it.breakdown.terms) terms[name] = value;
    iters.push_back({{"epoch", it.epoch},
                     {"level", it.level},
                     {"view", it.view},
                     {"matched_patch", it.matched_patch},
                     {"terms", terms},
                     {"total", it.breakdown.total}});
  }
  doc["iterations"] = iters;
  return doc.dump(2);
}

void save_train_checkpoint(const std::string& path, const TrainState& state,
                           const NeuralTextureField& field, const FieldOptimizer& opt) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error::io("cannot write checkpoint: " + path);
  const char magic[8] = {'C', 'T', 'X', 'T', 'R', 'N', '0', '1'};
  os.write(magic, 8);
  const std::int64_t header[2] = {state.next_epoch, state.iteration};
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  const std::uint64_t rng_len = state.rng_state.size();
  os.write(reinterpret_cast<const char*>(&rng_len), 8);
  os.write(state.rng_state.data(), static_cast<std::streamsize>(rng_len));
  opt.serialize(os);

  // Field parameters are embedded via its own format for reuse by bake.
  const std::string field_path = path + ".field";
  field.save(field_path);
  std::ifstream fin(field_path, std::ios::binary);
  const std::string blob((std::istreambuf_iterator<char>(fin)),
                         std::istreambuf_iterator<char>());
  const std::uint64_t blob_len = blob.size();
  os.write(reinterpret_cast<const char*>(&blob_len), 8);
  os.write(blob.data(), static_cast<std::streamsize>(blob_len));
  if (!os) throw Error::io("failed writing checkpoint: " + path);
}

TrainState load_train_checkpoint(const std::string& path, NeuralTextureField& field,
                                 FieldOptimizer& opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error::io("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "CTXTRN01", 8) != 0)
    throw Error::io("not a trainer checkpoint: " + path);
  TrainState state;
  std::int64_t header[2];
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  state.next_epoch = static_cast<int>(header[0]);
  state.iteration = header[1];
  std::uint64_t rng_len = 0;
  is.read(reinterpret_cast<char*>(&rng_len), 8);
  state.rng_state.resize(rng_len);
  is.read(state.rng_state.data(), static_cast<std::streamsize>(rng_len));
  opt.deserialize(is);
  std::uint64_t blob_len = 0;
  is.read(reinterpret_cast<char*>(&blob_len), 8);
  std::string blob(blob_len, '\0');
  is.read(blob.data(), static_cast<std::streamsize>(blob_len));
  if (!is) throw Error::io("checkpoint truncated: " + path);

  const std::string tmp = path + ".field.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  NeuralTextureField loaded = NeuralTextureField::load(tmp);
  fs::remove(tmp);
  if (loaded.parameter_count() != field.parameter_count())
    throw Error::io("checkpoint field does not match the configured field");
  field.grid_params() = loaded.grid_params();
  field.decoder_params() = loaded.decoder_params();
  return state;
}

NeuralTextureField load_field_from_any_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error::io("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is) throw Error::io("checkpoint truncated: " + path);
  if (std::memcmp(magic, "CTXFLD01", 8) == 0) {
    is.close();
    return NeuralTextureField::load(path);
  }
  if (std::memcmp(magic, "CTXTRN01", 8) != 0)
    throw Error::io("not a recognized checkpoint: " + path);

  // Skip the trainer header (counters, rng, optimizer moments) and load the
  // embedded field blob.
  std::int64_t header[2];
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  std::uint64_t rng_len = 0;
  is.read(reinterpret_cast<char*>(&rng_len), 8);
  is.seekg(static_cast<std::streamoff>(rng_len), std::ios::cur);
  std::int64_t opt_t = 0;
  is.read(reinterpret_cast<char*>(&opt_t), 8);
  std::uint64_t sizes[2];
  is.read(reinterpret_cast<char*>(sizes), 16);
  is.seekg(static_cast<std::streamoff>((sizes[0] + sizes[1]) * 2 * sizeof(real)), std::ios::cur);
  std::uint64_t blob_len = 0;
  is.read(reinterpret_cast<char*>(&blob_len), 8);
  std::string blob(blob_len, '\0');
  is.read(blob.data(), static_cast<std::streamsize>(blob_len));
  if (!is) throw Error::io("checkpoint truncated: " + path);
  const std::string tmp = path + ".field.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  NeuralTextureField field = NeuralTextureField::load(tmp);
  fs::remove(tmp);
  return field;
}

StylizationReport run_stylization(const TexturedScene& scene, const StyleReference& style,
                                  NeuralTextureField& field, const StylizationConfig& config,
                                  const FeatureExtractor& fx, const EmbeddingModel& em,
                                  const std::optional<std::string>& resume_checkpoint) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  scene.validate();
  const SemanticClassSet classes = SemanticClassSet::urban();
  const std::int16_t building = static_cast<std::int16_t>(classes.index("building"));

  // In edit mode the edited image becomes the style reference; its
  // segmentation is the rendered semantic map at the edited viewpoint.
  StyleReference ref = style;
  std::optional<RenderBuffers> edited_buffers;
  if (config.mode == StylizationMode::edit_propagation) {
    edited_buffers = rasterize(scene, config.edited->camera);
    ref.image = config.edited->image;
    ref.segmentation = loss_labels(
        *edited_buffers, render_semantics(*edited_buffers, scene.semantics), building);
  }
  ref.validate();

  const ViewPlan plan =
      plan_pivot_views(scene, config.pivot_positions, config.regions, config.offset_fraction,
                       config.render_width, config.render_height, config.fov_start_deg,
                       config.seed);
  ProgressiveSchedule schedule;
  schedule.levels = config.levels;
  schedule.fov_start_deg = config.fov_start_deg;
  schedule.fov_end_deg = config.fov_end_deg;
  schedule.views_per_level = config.resolved_views_per_level();
  schedule.alpha = config.alpha;
  schedule.validate();

  const Vec3 scene_center = scene.aabb.center();

  // Style reference feature context at the working resolution (cached for
  // the whole run; it only depends on the reference image).
  Image full_style_img = ref.image;
  if (config.patch_feature_resolution > 0 &&
      (full_style_img.height() != config.patch_feature_resolution ||
       full_style_img.width() != config.patch_feature_resolution))
    full_style_img = resize_bilinear(ref.image, config.patch_feature_resolution,
                                     config.patch_feature_resolution);
  const FeatureExtractor::Context full_style_ctx =
      fx.forward(full_style_img, FeatureExtractor::kContentTap, false);

  FieldOptimizer opt(field, config.lr_grid, config.lr_decoder);
  Rng rng(config.seed);
  TrainState state;
  if (resume_checkpoint) {
    state = load_train_checkpoint(*resume_checkpoint, field, opt);
    rng = Rng::deserialize(state.rng_state);
  }

  std::ofstream log;
  if (!config.log_path.empty()) {
    fs::create_directories(fs::path(config.log_path).parent_path());
    log.open(config.log_path, resume_checkpoint ? std::ios::app : std::ios::trunc);
    if (!log) throw Error::io("cannot open loss log: " + config.log_path);
  }

  StylizationReport report;
  const std::vector<int> views_per_level = schedule.views_per_level;

  for (int epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    const int level = epoch * config.levels / config.epochs;

    // Draw order per epoch: patch bank crops, audit view index, then the
    // per-view pose draws. Checkpoints sit at epoch boundaries, so a resumed
    // stream replays identically.
    const int min_side = std::min(ref.image.width(), ref.image.height());
    std::vector<int> scales;
    if (config.patches_per_scale > 0 && min_side >= kMinPatchSide)
      scales = scales_for_level(level, config.levels, min_side);
    const PatchBank bank =
        build_patch_bank(ref, scales, config.patches_per_scale, rng, fx, config.descriptor_grid,
                         config.patch_feature_resolution);
    EpochPatchCache patch_cache;

    const int n_views = views_per_level[level];
    const int audit_view = static_cast<int>(rng.uniform_index(std::max(1, n_views)));

    for (int view_i = 0; view_i < n_views; ++view_i) {
      const CameraPose pose = sample_novel_view(plan, level, schedule, scene_center, rng);
      const RenderBuffers buffers = rasterize(scene, pose);
      ++state.iteration;
      if (!buffers.any_hit) {
        ++report.skipped_empty_views;
        continue;
      }

      const Image c = render_content(buffers, scene.texture);
      Image z = render_from_field(buffers, field);
      const LabelImage z_labels =
          loss_labels(buffers, render_semantics(buffers, scene.semantics), building);
      const std::vector<std::uint8_t> fg = fg_mask_of(buffers);

      if (view_i == audit_view) audit_background_zero(c, z, buffers);

      // One backbone pass per image; every feature-space loss accumulates
      // into shared tap gradients scaled by its weight.
      const FeatureExtractor::Context c_ctx =
          fx.forward(c, FeatureExtractor::kContentTap, false);
      FeatureExtractor::Context z_ctx = fx.forward(z, FeatureExtractor::kContentTap, true);

      const StructureDescriptor c_desc =
          self_similarity(c_ctx.tap(FeatureExtractor::kStructureTap), config.descriptor_grid);
      const int patch_idx = match_patch_index(c_desc, bank);
      const StylePatch& patch = bank.patches[patch_idx];
      const FeatureExtractor::Context& patch_ctx =
          patch_cache.context(patch_idx, bank, fx, config.patch_feature_resolution);

      LossValues values;
      TapGradients d_taps;
      values.content = content_loss_ctx(c_ctx, z_ctx, &d_taps, config.weights.content);
      values.global_style =
          global_style_loss_ctx(patch_ctx, z_ctx, &fg, z.height(), z.width(), &d_taps,
                                config.weights.global_style);
      values.local_style = local_semantic_loss_ctx(
          z_ctx, z_labels, &fg, z.height(), z.width(), patch_ctx, patch.segmentation,
          full_style_ctx, ref.segmentation, classes, &report.local_counters, &d_taps,
          config.weights.local_style);

      Image d_z = fx.backward(z_ctx, d_taps);

      // Photorealism regularizer (skipped entirely while its weight is 0).
      const bool pht_active = config.weights.photorealism > 0.0 &&
                              epoch >= config.weights.photorealism_warmup_epochs;
      if (pht_active) {
        const int lap_res = std::min({config.laplacian_resolution, z.height(), z.width()});
        const bool downsampled = lap_res != z.height() || lap_res != z.width();
        const Image c_small = downsampled ? resize_area(c, lap_res, lap_res) : c;
        const Image z_small = downsampled ? resize_area(z, lap_res, lap_res) : z;
        const MattingLaplacian lap = matting_laplacian(c_small);
        Image d_small;
        values.photorealism = photorealism_loss(z_small, lap, &d_small);
        for (real& v : d_small.data()) v *= config.weights.photorealism;
        if (downsampled)
          resize_area_adjoint(d_small, z.height(), z.width(), d_z);
        else
          for (std::size_t i = 0; i < d_z.size(); ++i) d_z.data()[i] += d_small.data()[i];
      }

      // Text-embedding losses, optionally against sky-composited views.
      {
        Image d_z_clip;
        const bool composite =
            config.clip_composite_sky && config.sky_image && !config.sky_image->empty();
        ClipLossResult clip;
        if (composite) {
          const Image z_sky = composite_sky(z, buffers, pose, *config.sky_image);
          const Image c_sky = composite_sky(c, buffers, pose, *config.sky_image);
          clip = clip_losses(c_sky, z_sky, ref.source_text, ref.target_text, em, &d_z_clip);
        } else {
          clip = clip_losses(c, z, ref.source_text, ref.target_text, em, &d_z_clip);
        }
        values.clip = clip.total;
        // Background pixels are constants; only foreground gradient flows.
        for (int ch = 0; ch < 3; ++ch) {
          const real* gp = d_z_clip.plane(ch);
          real* dp = d_z.plane(ch);
          for (std::size_t i = 0; i < d_z.plane_size(); ++i)
            if (fg[i]) dp[i] += config.weights.text * gp[i];
        }
      }

      // Edited-view penalty at its fixed viewpoint.
      Image d_z_edited;
      Image z_edited;
      if (config.mode == StylizationMode::edit_propagation) {
        z_edited = render_from_field(*edited_buffers, field);
        values.edited = edited_view_penalty(z_edited, config.edited->image, &d_z_edited);
        for (real& v : d_z_edited.data()) v *= config.weights.edited;
      }

      const LossBreakdown breakdown = total_loss(values, config.weights, epoch);

      field.zero_grad();
      render_from_field_backward(buffers, field, d_z);
      if (config.mode == StylizationMode::edit_propagation)
        render_from_field_backward(*edited_buffers, field, d_z_edited);
      opt.step();

      if (view_i == 0 && !config.debug_dump_dir.empty()) {
        fs::create_directories(config.debug_dump_dir);
        if (config.dump_buffers)
          dump_buffers(buffers, config.debug_dump_dir, fmt::format("epoch{:03d}", epoch));
        if (config.dump_matches)
          write_png((fs::path(config.debug_dump_dir) /
                     fmt::format("epoch{:03d}_match.png", epoch))
                        .string(),
                    match_contact_sheet(c, patch.image));
      }

      IterationRecord record;
      record.epoch = epoch;
      record.level = level;
      record.view = view_i;
      record.matched_patch = patch_idx;
      record.breakdown = breakdown;
      report.iterations.push_back(record);

      if (log.is_open()) {
        json line = {{"epoch", epoch}, {"level", level}, {"view", view_i},
                     {"patch", patch_idx}, {"total", breakdown.total}};
        for (const auto& [name, value] : breakdown.terms) line[name] = value;
        log << line.dump() << "\n";
      }
    }

    state.next_epoch = epoch + 1;
    report.epochs_run = epoch + 1;
    if (!config.checkpoint_dir.empty() &&
        ((epoch + 1) % config.checkpoint_interval_epochs == 0 || epoch + 1 == config.epochs)) {
      state.rng_state = rng.serialize();
      const std::string path =
          (fs::path(config.checkpoint_dir) / fmt::format("epoch_{:04d}.ckpt", epoch + 1)).string();
      save_train_checkpoint(path, state, field, opt);
      save_train_checkpoint((fs::path(config.checkpoint_dir) / "latest.ckpt").string(), state,
                            field, opt);
    }
  }

  report.field_clamp_warnings = field.clamp_warnings();
  report.elapsed_seconds =
      std::chrono::duration<real>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace citytex
