/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/run_config.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace citytex {

using nlohmann::json;

std::string interpolate_env(const std::string& value) {
  std::string out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const std::size_t start = value.find("${", pos);
    if (start == std::string::npos) {
      out += value.substr(pos);
      break;
    }
    const std::size_t end = value.find('}', start + 2);
    if (end == std::string::npos)
      throw Error::config("unterminated ${...} in config string: " + value);
    out += value.substr(pos, start - pos);
    const std::string name = value.substr(start + 2, end - start - 2);
    const char* env = std::getenv(name.c_str());
    if (!env)
      throw Error::config(fmt::format("environment variable '{}' referenced in config is unset",
                                      name));
    out += env;
    pos = end + 1;
  }
  return out;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error::config(fmt::format("config {}: {}", where, what));
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(where, "missing required key '" + key + "'");
  }
  if (!obj[key].is_string()) fail(where, "'" + key + "' must be a string");
  return interpolate_env(obj[key].get<std::string>());
}

template <typename T>
T get_number(const json& obj, const std::string& where, const std::string& key, T fallback,
             T lo, T hi) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(where, "'" + key + "' must be a number");
  const T v = obj[key].get<T>();
  if (v < lo || v > hi)
    fail(where, fmt::format("'{}' = {} outside [{}, {}]", key, v, lo, hi));
  return v;
}

bool get_bool(const json& obj, const std::string& where, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) fail(where, "'" + key + "' must be a boolean");
  return obj[key].get<bool>();
}

CameraPose parse_camera(const json& obj, const std::string& where) {
  check_keys(obj, where, {"position", "look_at", "up", "fov_deg", "width", "height"});
  auto vec = [&](const char* key, Vec3 fallback, bool required) {
    if (!obj.contains(key)) {
      if (required) fail(where, fmt::format("missing '{}'", key));
      return fallback;
    }
    const json& a = obj[key];
    if (!a.is_array() || a.size() != 3) fail(where, fmt::format("'{}' must be [x,y,z]", key));
    return Vec3(a[0].get<real>(), a[1].get<real>(), a[2].get<real>());
  };
  CameraPose pose;
  pose.position = vec("position", Vec3::Zero(), true);
  pose.look_at = vec("look_at", Vec3::Zero(), true);
  pose.up = vec("up", Vec3::UnitY(), false);
  pose.fov_deg = get_number<real>(obj, where, "fov_deg", 60.0, 1.0, 179.0);
  pose.width = get_number<int>(obj, where, "width", 512, 1, 8192);
  pose.height = get_number<int>(obj, where, "height", 512, 1, 8192);
  pose.validate();
  return pose;
}

}  // namespace

RunConfig parse_run_config_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error::config(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw Error::config("config root must be a JSON object");
  check_keys(doc, "root",
             {"scene", "style", "mode", "seed", "output_dir", "stylization", "field", "distill",
              "features", "embedding", "sky", "edit", "debug"});

  RunConfig cfg;

  {
    if (!doc.contains("scene")) fail("root", "missing 'scene' section");
    const json& s = doc["scene"];
    check_keys(s, "scene", {"mesh", "texture", "semantics"});
    cfg.mesh_path = get_string(s, "scene", "mesh");
    cfg.texture_path = get_string(s, "scene", "texture");
    if (s.contains("semantics")) cfg.semantics_path = get_string(s, "scene", "semantics");
  }
  {
    if (!doc.contains("style")) fail("root", "missing 'style' section");
    const json& s = doc["style"];
    check_keys(s, "style", {"image", "segmentation", "source_text", "target_text"});
    cfg.style_image_path = get_string(s, "style", "image");
    if (s.contains("segmentation"))
      cfg.style_segmentation_path = get_string(s, "style", "segmentation");
    cfg.source_text = get_string(s, "style", "source_text", cfg.source_text);
    cfg.target_text = get_string(s, "style", "target_text");
  }

  cfg.mode = doc.contains("mode") ? get_string(doc, "root", "mode") : cfg.mode;
  cfg.seed = get_number<std::uint64_t>(doc, "root", "seed", 0, 0,
                                       std::numeric_limits<std::uint64_t>::max());
  cfg.output_dir = doc.contains("output_dir") ? get_string(doc, "root", "output_dir") : "out";

  cfg.stylization.mode = parse_mode(cfg.mode);
  cfg.stylization.weights = select_mode_weights(cfg.stylization.mode);
  cfg.stylization.seed = cfg.seed;

  if (doc.contains("stylization")) {
    const json& s = doc["stylization"];
    check_keys(s, "stylization",
               {"epochs", "levels", "fov_start_deg", "fov_end_deg", "render_width",
                "render_height", "views_per_level_base", "views_per_level", "pivot_positions",
                "regions", "offset_fraction", "alpha", "laplacian_resolution", "descriptor_grid",
                "patches_per_scale", "patch_feature_resolution", "clip_composite_sky",
                "checkpoint_interval_epochs", "lr_grid", "lr_decoder", "weights"});
    StylizationConfig& t = cfg.stylization;
    t.epochs = get_number<int>(s, "stylization", "epochs", 20, 1, 100000);
    t.levels = get_number<int>(s, "stylization", "levels", 5, 1, 64);
    t.fov_start_deg = get_number<real>(s, "stylization", "fov_start_deg", 90.0, 1.0, 179.0);
    t.fov_end_deg = get_number<real>(s, "stylization", "fov_end_deg", 20.0, 1.0, 179.0);
    t.render_width = get_number<int>(s, "stylization", "render_width", 512, 8, 4096);
    t.render_height = get_number<int>(s, "stylization", "render_height", 512, 8, 4096);
    t.views_per_level_base =
        get_number<int>(s, "stylization", "views_per_level_base", 64, 1, 1 << 20);
    if (s.contains("views_per_level")) {
      if (!s["views_per_level"].is_array()) fail("stylization", "'views_per_level' must be an array");
      t.views_per_level = s["views_per_level"].get<std::vector<int>>();
    }
    t.pivot_positions = get_number<int>(s, "stylization", "pivot_positions", 5, 1, 1024);
    t.regions = get_number<int>(s, "stylization", "regions", 9, 1, 4096);
    t.offset_fraction = get_number<real>(s, "stylization", "offset_fraction", 0.35, 1e-6, 10.0);
    t.alpha = get_number<real>(s, "stylization", "alpha", 0.25, 0.0, 0.999);
    t.laplacian_resolution =
        get_number<int>(s, "stylization", "laplacian_resolution", 256, 3, 1024);
    t.lr_grid = get_number<real>(s, "stylization", "lr_grid", 1e-2, 1e-8, 10.0);
    t.lr_decoder = get_number<real>(s, "stylization", "lr_decoder", 1e-3, 1e-8, 10.0);
    t.descriptor_grid = get_number<int>(s, "stylization", "descriptor_grid", 16, 2, 64);
    t.patches_per_scale = get_number<int>(s, "stylization", "patches_per_scale", 8, 0, 256);
    t.patch_feature_resolution =
        get_number<int>(s, "stylization", "patch_feature_resolution", 256, 0, 2048);
    t.clip_composite_sky = get_bool(s, "stylization", "clip_composite_sky", true);
    t.checkpoint_interval_epochs =
        get_number<int>(s, "stylization", "checkpoint_interval_epochs", 1, 1, 100000);
    if (s.contains("weights")) {
      const json& w = s["weights"];
      check_keys(w, "stylization.weights",
                 {"content", "photorealism", "global_style", "text", "local_style", "edited",
                  "photorealism_warmup_epochs"});
      cfg.has_weight_overrides = true;
      LossWeights& lw = t.weights;
      lw.content = get_number<real>(w, "weights", "content", lw.content, 0.0, 1e9);
      lw.photorealism = get_number<real>(w, "weights", "photorealism", lw.photorealism, 0.0, 1e9);
      lw.global_style = get_number<real>(w, "weights", "global_style", lw.global_style, 0.0, 1e9);
      lw.text = get_number<real>(w, "weights", "text", lw.text, 0.0, 1e9);
      lw.local_style = get_number<real>(w, "weights", "local_style", lw.local_style, 0.0, 1e9);
      lw.edited = get_number<real>(w, "weights", "edited", lw.edited, 0.0, 1e9);
      lw.photorealism_warmup_epochs = get_number<int>(w, "weights", "photorealism_warmup_epochs",
                                                      lw.photorealism_warmup_epochs, 0, 100000);
    }
  }

  if (doc.contains("field")) {
    const json& f = doc["field"];
    check_keys(f, "field",
               {"levels", "base_resolution", "growth", "features_per_level", "table_log2",
                "hidden_width", "init_seed", "max_param_bytes"});
    cfg.field.levels = get_number<int>(f, "field", "levels", 16, 1, 32);
    cfg.field.base_resolution = get_number<int>(f, "field", "base_resolution", 16, 2, 1024);
    cfg.field.growth = get_number<real>(f, "field", "growth", 1.5, 1.0, 4.0);
    cfg.field.features_per_level = get_number<int>(f, "field", "features_per_level", 2, 1, 8);
    cfg.field.table_log2 = get_number<int>(f, "field", "table_log2", 17, 4, 24);
    cfg.field.hidden_width = get_number<int>(f, "field", "hidden_width", 64, 4, 1024);
    cfg.field.init_seed = get_number<std::uint64_t>(f, "field", "init_seed", 1234, 0,
                                                    std::numeric_limits<std::uint64_t>::max());
    cfg.field.max_param_bytes = get_number<std::uint64_t>(
        f, "field", "max_param_bytes", cfg.field.max_param_bytes, 1,
        std::numeric_limits<std::uint64_t>::max());
  }

  if (doc.contains("distill")) {
    const json& d = doc["distill"];
    check_keys(d, "distill", {"batch_size", "steps", "target_psnr", "eval_interval", "seed"});
    cfg.distill.batch_size = get_number<int>(d, "distill", "batch_size", 4096, 1, 1 << 20);
    cfg.distill.steps = get_number<int>(d, "distill", "steps", 4000, 1, 1 << 24);
    cfg.distill.target_psnr = get_number<real>(d, "distill", "target_psnr", 30.0, 1.0, 100.0);
    cfg.distill.eval_interval = get_number<int>(d, "distill", "eval_interval", 250, 1, 1 << 24);
    cfg.distill.seed = get_number<std::uint64_t>(d, "distill", "seed", 99, 0,
                                                 std::numeric_limits<std::uint64_t>::max());
  }

  if (doc.contains("features")) {
    const json& f = doc["features"];
    check_keys(f, "features", {"width_scale", "seed", "weights"});
    cfg.feature_width_scale = get_number<real>(f, "features", "width_scale", 1.0, 0.01, 4.0);
    cfg.feature_seed = get_number<std::uint64_t>(f, "features", "seed", 205, 0,
                                                 std::numeric_limits<std::uint64_t>::max());
    if (f.contains("weights")) cfg.feature_weights_path = get_string(f, "features", "weights");
  }

  if (doc.contains("embedding")) {
    const json& e = doc["embedding"];
    check_keys(e, "embedding", {"backend", "dim", "seed"});
    cfg.embedding_backend = get_string(e, "embedding", "backend", cfg.embedding_backend);
    cfg.embedding_dim = get_number<int>(e, "embedding", "dim", 64, 2, 4096);
    cfg.embedding_seed = get_number<std::uint64_t>(e, "embedding", "seed", 31, 0,
                                                   std::numeric_limits<std::uint64_t>::max());
  }

  if (doc.contains("sky")) {
    const json& s = doc["sky"];
    check_keys(s, "sky",
               {"backend", "height", "steps", "guidance_weight", "guidance_interval", "windows",
                "cubemap_face_size"});
    cfg.sky_backend = get_string(s, "sky", "backend", cfg.sky_backend);
    cfg.sky_height = get_number<int>(s, "sky", "height", 1024, 16, 8192);
    cfg.sky_steps = get_number<int>(s, "sky", "steps", 50, 1, 1000);
    cfg.sky_guidance_weight = get_number<real>(s, "sky", "guidance_weight", 0.1, 0.0, 100.0);
    cfg.sky_guidance_interval = get_number<int>(s, "sky", "guidance_interval", 5, 1, 1000);
    cfg.sky_windows = get_number<int>(s, "sky", "windows", 26, 1, 4096);
    cfg.sky_cubemap_face_size = get_number<int>(s, "sky", "cubemap_face_size", 0, 0, 4096);
  }

  if (doc.contains("edit")) {
    const json& e = doc["edit"];
    check_keys(e, "edit", {"image", "camera"});
    cfg.edit_image_path = get_string(e, "edit", "image");
    if (!e.contains("camera")) fail("edit", "missing 'camera'");
    cfg.edit_camera = parse_camera(e["camera"], "edit.camera");
  }

  if (doc.contains("debug")) {
    const json& d = doc["debug"];
    check_keys(d, "debug", {"dump_buffers", "dump_matches"});
    cfg.dump_buffers = get_bool(d, "debug", "dump_buffers", false);
    cfg.dump_matches = get_bool(d, "debug", "dump_matches", false);
  }

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::config("cannot open config file: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_run_config_json(text);
}

void RunConfig::validate() const {
  if (mesh_path.empty() || texture_path.empty())
    throw Error::config("scene mesh and texture paths are required");
  if (style_image_path.empty()) throw Error::config("style image path is required");
  if (target_text.empty()) throw Error::config("style target_text is required");
  if (source_text.empty()) throw Error::config("style source_text must be non-empty");
  parse_mode(mode);  // throws on unknown mode
  if (mode == "edit_propagation" && (!edit_image_path || !edit_camera))
    throw Error::config("edit_propagation requires the 'edit' section (image + camera)");
  StylizationConfig probe = stylization;
  probe.weights.validate();
  if (output_dir.empty()) throw Error::config("output_dir must be non-empty");
}

void write_manifest(const std::string& path, const std::string& subcommand,
                    const std::string& config_json_canonical,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<ManifestOutput>& outputs) {
  json doc;
  doc["format"] = "citytex-manifest";
  doc["tool_version"] = kToolVersion;
  doc["subcommand"] = subcommand;
  doc["config"] = json::parse(config_json_canonical.empty() ? "null" : config_json_canonical);
  json in = json::array();
  for (const auto& [name, file] : inputs)
    in.push_back({{"name", name},
                  {"path", file},
                  {"fnv1a64", fmt::format("{:016x}", fnv1a64_file(file))}});
  doc["inputs"] = in;
  json out = json::array();
  for (const ManifestOutput& o : outputs) {
    json entry = {{"name", o.name}, {"path", o.path}};
    if (o.hashed) entry["fnv1a64"] = fmt::format("{:016x}", fnv1a64_file(o.path));
    out.push_back(entry);
  }
  doc["outputs"] = out;
  std::ofstream os(path);
  if (!os) throw Error::io("cannot write manifest: " + path);
  os << doc.dump(2) << "\n";
}

}  // namespace citytex
