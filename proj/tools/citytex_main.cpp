/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/embedding.hpp"
#include "citytex/fixture.hpp"
#include "citytex/image_io.hpp"
#include "citytex/metrics.hpp"
#include "citytex/run_config.hpp"
#include "citytex/sky.hpp"
#include "citytex/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace citytex;

namespace {

struct Pipeline {
  RunConfig cfg;
  std::string config_path;
  std::string canonical_config;  // re-dumped config file for manifests

  fs::path out() const { return fs::path(cfg.output_dir); }

  FeatureExtractor make_fx() const {
    FeatureExtractorConfig fcfg;
    fcfg.width_scale = cfg.feature_width_scale;
    fcfg.init_seed = cfg.feature_seed;
    FeatureExtractor fx(fcfg);
    if (cfg.feature_weights_path) fx.load_weights(*cfg.feature_weights_path);
    return fx;
  }

  std::unique_ptr<EmbeddingModel> make_em() const {
    return make_embedding_model(cfg.embedding_backend, cfg.embedding_dim, cfg.embedding_seed);
  }

  TexturedScene load_scene_from_config() const {
    return load_scene(cfg.mesh_path, cfg.texture_path, cfg.semantics_path);
  }

  StyleReference load_style() const {
    StyleReference style;
    style.image = read_png(cfg.style_image_path);
    if (cfg.style_segmentation_path) {
      style.segmentation = read_label_png(*cfg.style_segmentation_path);
    } else {
      // Without a segmentation everything counts as "building"; the local
      // style loss then behaves like a foreground-global term.
      const SemanticClassSet classes = SemanticClassSet::urban();
      style.segmentation = LabelImage(style.image.height(), style.image.width(),
                                      static_cast<std::int16_t>(classes.index("building")));
    }
    style.source_text = cfg.source_text;
    style.target_text = cfg.target_text;
    style.validate();
    return style;
  }

  std::vector<std::pair<std::string, std::string>> scene_inputs() const {
    std::vector<std::pair<std::string, std::string>> in = {{"mesh", cfg.mesh_path},
                                                           {"texture", cfg.texture_path}};
    if (cfg.semantics_path) in.emplace_back("semantics", *cfg.semantics_path);
    return in;
  }

  std::vector<std::pair<std::string, std::string>> style_inputs() const {
    std::vector<std::pair<std::string, std::string>> in = {{"style_image", cfg.style_image_path}};
    if (cfg.style_segmentation_path)
      in.emplace_back("style_segmentation", *cfg.style_segmentation_path);
    return in;
  }
};

Pipeline load_pipeline(const std::string& config_path) {
  Pipeline p;
  p.config_path = config_path;
  p.cfg = load_run_config(config_path);
  std::ifstream in(config_path);
  const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  p.canonical_config = json::parse(raw).dump();
  return p;
}

std::string distilled_field_path(const Pipeline& p) {
  return (p.out() / "distilled.field").string();
}
std::string checkpoint_dir(const Pipeline& p) { return (p.out() / "checkpoints").string(); }
std::string latest_checkpoint(const Pipeline& p) {
  return (p.out() / "checkpoints" / "latest.ckpt").string();
}

void cmd_make_fixture(const std::string& out_dir, int blocks, int texture_size, int style_size,
                      std::uint64_t seed) {
  FixtureOptions opt;
  opt.blocks = blocks;
  opt.texture_size = texture_size;
  opt.style_size = style_size;
  opt.seed = seed;
  const CubeCity city = make_cube_city(opt);
  save_fixture(city, out_dir);
  fmt::print("fixture written to {} ({} faces, {}x{} texture)\n", out_dir,
             city.scene.mesh.face_count(), texture_size, texture_size);
}

void cmd_plan_views(const Pipeline& p) {
  const TexturedScene scene = p.load_scene_from_config();
  const StylizationConfig& t = p.cfg.stylization;
  const ViewPlan plan =
      plan_pivot_views(scene, t.pivot_positions, t.regions, t.offset_fraction, t.render_width,
                       t.render_height, t.fov_start_deg, t.seed);
  ProgressiveSchedule schedule;
  schedule.levels = t.levels;
  schedule.fov_start_deg = t.fov_start_deg;
  schedule.fov_end_deg = t.fov_end_deg;
  schedule.views_per_level = t.resolved_views_per_level();
  schedule.alpha = t.alpha;

  fs::create_directories(p.out());
  const std::string plan_path = (p.out() / "plan.json").string();
  save_view_plan(plan_path, plan, schedule);
  write_manifest((p.out() / "manifest_plan-views.json").string(), "plan-views",
                 p.canonical_config, p.scene_inputs(), {{"plan", plan_path, true}});
  fmt::print("planned {} pivot views ({} positions x {} regions) -> {}\n", plan.pivots.size(),
             plan.pivot_positions.size(), plan.region_centroids.size(), plan_path);
}

void cmd_distill(const Pipeline& p) {
  const TexturedScene scene = p.load_scene_from_config();
  NeuralTextureField field(p.cfg.field);
  fmt::print("distilling {}x{} texture into {} parameters ({} bytes)\n", scene.texture.width(),
             scene.texture.height(), field.parameter_count(), field.parameter_bytes());
  const DistillationReport report = distill(field, scene.texture, p.cfg.distill);

  fs::create_directories(p.out());
  const std::string field_path = distilled_field_path(p);
  field.save(field_path);

  json rep;
  rep["achieved_psnr_db"] = report.achieved_psnr;
  rep["steps_run"] = report.steps_run;
  rep["parameter_count"] = field.parameter_count();
  rep["parameter_bytes"] = field.parameter_bytes();
  json curve = json::array();
  for (const auto& [step, psnr] : report.psnr_curve) curve.push_back({{"step", step}, {"psnr", psnr}});
  rep["psnr_curve"] = curve;
  const std::string report_path = (p.out() / "distill_report.json").string();
  std::ofstream(report_path) << rep.dump(2) << "\n";

  write_manifest((p.out() / "manifest_distill.json").string(), "distill", p.canonical_config,
                 p.scene_inputs(),
                 {{"field", field_path, true}, {"report", report_path, true}});
  fmt::print("distilled to {:.2f} dB in {} steps -> {}\n", report.achieved_psnr, report.steps_run,
             field_path);
}

StylizationConfig stylization_config_for_run(const Pipeline& p) {
  StylizationConfig t = p.cfg.stylization;
  t.checkpoint_dir = checkpoint_dir(p);
  t.log_path = (p.out() / "loss_log.jsonl").string();
  if (p.cfg.dump_buffers || p.cfg.dump_matches) {
    t.debug_dump_dir = (p.out() / "debug").string();
    t.dump_buffers = p.cfg.dump_buffers;
    t.dump_matches = p.cfg.dump_matches;
  }
  if (t.clip_composite_sky) {
    const fs::path sky_path = p.out() / "sky.png";
    if (fs::exists(sky_path)) t.sky_image = read_png(sky_path.string());
  }
  if (t.mode == StylizationMode::edit_propagation) {
    EditedView edited;
    edited.camera = *p.cfg.edit_camera;
    edited.image = read_png(*p.cfg.edit_image_path);
    t.edited = std::move(edited);
  }
  return t;
}

void cmd_stylize(const Pipeline& p, const std::string& resume) {
  const TexturedScene scene = p.load_scene_from_config();
  const StyleReference style = p.load_style();
  const FeatureExtractor fx = p.make_fx();
  const auto em = p.make_em();
  const StylizationConfig t = stylization_config_for_run(p);

  NeuralTextureField field(p.cfg.field);
  if (t.mode == StylizationMode::artistic) {
    fmt::print("artistic mode: starting from a fresh field (no distillation)\n");
  } else {
    const std::string field_path = distilled_field_path(p);
    if (!fs::exists(field_path))
      throw Error::config(fmt::format(
          "missing prerequisite artifact '{}'; run the distill subcommand first", field_path));
    field = NeuralTextureField::load(field_path);
  }

  std::optional<std::string> resume_path;
  if (!resume.empty()) resume_path = resume;
  const StylizationReport report =
      run_stylization(scene, style, field, t, fx, *em, resume_path);

  fs::create_directories(p.out());
  const std::string report_path = (p.out() / "stylize_report.json").string();
  std::ofstream(report_path) << report.to_json() << "\n";

  write_manifest((p.out() / "manifest_stylize.json").string(), "stylize", p.canonical_config,
                 [&] {
                   auto in = p.scene_inputs();
                   const auto style_in = p.style_inputs();
                   in.insert(in.end(), style_in.begin(), style_in.end());
                   return in;
                 }(),
                 {{"checkpoint", latest_checkpoint(p), true},
                  {"report", report_path, false},
                  {"loss_log", t.log_path, true}});
  fmt::print("stylization finished: {} iterations, {:.1f}s -> {}\n", report.iterations.size(),
             report.elapsed_seconds, latest_checkpoint(p));
}

void cmd_bake(const Pipeline& p, std::string checkpoint, int width, int height) {
  if (checkpoint.empty()) checkpoint = latest_checkpoint(p);
  if (!fs::exists(checkpoint))
    throw Error::config(fmt::format(
        "missing prerequisite artifact '{}'; run stylize (or pass --checkpoint)", checkpoint));
  const NeuralTextureField field = load_field_from_any_checkpoint(checkpoint);
  const Image baked = bake(field, width, height);

  const TexturedScene scene = p.load_scene_from_config();
  fs::create_directories(p.out());
  const std::string tex_path = (p.out() / "baked_texture.png").string();
  write_png(tex_path, baked);
  const std::string obj_path = (p.out() / "baked.obj").string();
  const std::string mtl_path = (p.out() / "baked.mtl").string();
  write_obj(scene.mesh, obj_path, mtl_path, "baked_texture.png");

  write_manifest((p.out() / "manifest_bake.json").string(), "bake", p.canonical_config,
                 {{"checkpoint", checkpoint}},
                 {{"texture", tex_path, true}, {"obj", obj_path, true}, {"mtl", mtl_path, true}});
  fmt::print("baked {}x{} texture -> {}\n", width, height, tex_path);
}

void cmd_sky(const Pipeline& p) {
  const StyleReference style = p.load_style();
  const auto backend = make_denoiser_backend(p.cfg.sky_backend, p.cfg.seed);
  const FeatureExtractor fx = p.make_fx();

  GuidanceConfig guidance;
  guidance.weight = p.cfg.sky_guidance_weight;
  guidance.interval = p.cfg.sky_guidance_interval;
  guidance.reference = &style.image;
  guidance.fx = &fx;

  const Image sky = synthesize_sky(style, *backend, guidance, p.cfg.sky_steps, p.cfg.seed,
                                   p.cfg.sky_height, nullptr, p.cfg.sky_windows);
  fs::create_directories(p.out());
  const std::string sky_path = (p.out() / "sky.png").string();
  write_png(sky_path, sky);
  std::vector<ManifestOutput> outputs = {{"sky", sky_path, true}};
  if (p.cfg.sky_cubemap_face_size > 0) {
    export_cubemap(sky, p.cfg.sky_cubemap_face_size, (p.out() / "sky_cube").string());
    for (const char* f : {"px", "nx", "py", "ny", "pz", "nz"})
      outputs.push_back({fmt::format("cube_{}", f),
                         (p.out() / fmt::format("sky_cube_{}.png", f)).string(), true});
  }
  write_manifest((p.out() / "manifest_sky.json").string(), "sky", p.canonical_config,
                 p.style_inputs(), outputs);
  fmt::print("sky panorama ({} backend, {} steps) -> {}\n", p.cfg.sky_backend, p.cfg.sky_steps,
             sky_path);
}

MetricReport evaluate_dirs(const std::string& dir_a, const std::string& dir_b,
                           const std::string& mask_dir, const std::string& prompt,
                           const FeatureExtractor& fx, const EmbeddingModel& em) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir_a))
    if (entry.path().extension() == ".png") names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw Error::config("no PNG views found in " + dir_a);

  MetricReport report;
  for (const std::string& name : names) {
    const fs::path pa = fs::path(dir_a) / name;
    const fs::path pb = fs::path(dir_b) / name;
    const fs::path pm = fs::path(mask_dir) / name;
    if (!fs::exists(pb)) throw Error::config("missing stylized view: " + pb.string());
    if (!fs::exists(pm)) throw Error::config("missing mask: " + pm.string());
    const Image a = read_png(pa.string());
    const Image b = read_png(pb.string());
    const Image mask_img = read_png(pm.string());
    std::vector<std::uint8_t> mask(mask_img.plane_size());
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask[i] = mask_img.plane(0)[i] > 0.5 ? 1 : 0;

    report.per_view_essim.push_back(essim(a, b));
    report.per_view_lpips.push_back(masked_lpips(a, b, mask, fx));
    report.per_view_clip.push_back(clip_score(b, prompt, em));
  }
  report.view_count = static_cast<int>(names.size());
  auto mean = [](const std::vector<real>& v) {
    real acc = 0.0;
    for (const real x : v) acc += x;
    return acc / static_cast<real>(v.size());
  };
  report.essim = mean(report.per_view_essim);
  report.masked_lpips = mean(report.per_view_lpips);
  report.clip_score = mean(report.per_view_clip);
  report.validate();
  return report;
}

void cmd_eval(const std::string& dir_a, const std::string& dir_b, const std::string& mask_dir,
              const std::string& prompt, const std::string& out_path, real width_scale,
              std::uint64_t feature_seed) {
  FeatureExtractorConfig fcfg;
  fcfg.width_scale = width_scale;
  fcfg.init_seed = feature_seed;
  const FeatureExtractor fx(fcfg);
  const auto em = make_embedding_model("procedural", 64, 31);
  const MetricReport report = evaluate_dirs(dir_a, dir_b, mask_dir, prompt, fx, *em);
  if (!out_path.empty()) {
    fs::create_directories(fs::path(out_path).parent_path());
    std::ofstream(out_path) << report.to_json() << "\n";
  }
  fmt::print("edge_operator={} views={}\n", report.edge_operator, report.view_count);
  fmt::print("essim={:.4f} masked_lpips={:.4f} clip_score={:.4f}\n", report.essim,
             report.masked_lpips, report.clip_score);
}

// Renders paired (content, stylized, mask) views off the pivot plan for the
// self-contained evaluation step of `all`.
void render_eval_views(const Pipeline& p, const TexturedScene& scene,
                       const NeuralTextureField& field, const std::string& dir_a,
                       const std::string& dir_b, const std::string& dir_m) {
  const StylizationConfig& t = p.cfg.stylization;
  const ViewPlan plan =
      plan_pivot_views(scene, t.pivot_positions, t.regions, t.offset_fraction, t.render_width,
                       t.render_height, t.fov_start_deg, t.seed);
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);
  fs::create_directories(dir_m);
  const int n = std::min<int>(8, static_cast<int>(plan.pivots.size()));
  const std::size_t stride = std::max<std::size_t>(1, plan.pivots.size() / n);
  int written = 0;
  for (std::size_t i = 0; i < plan.pivots.size() && written < n; i += stride, ++written) {
    const RenderBuffers buffers = rasterize(scene, plan.pivots[i]);
    const Image content = render_content(buffers, scene.texture);
    const Image stylized = render_from_field(buffers, field);
    Image mask(1, buffers.height, buffers.width);
    for (std::size_t px = 0; px < buffers.pixel_count(); ++px)
      mask.data()[px] = buffers.fg[px] ? 1.0 : 0.0;
    const std::string name = fmt::format("view_{:03d}.png", written);
    write_png((fs::path(dir_a) / name).string(), content);
    write_png((fs::path(dir_b) / name).string(), stylized);
    write_png((fs::path(dir_m) / name).string(), mask);
  }
}

void cmd_all(const Pipeline& p) {
  cmd_plan_views(p);
  if (p.cfg.stylization.mode != StylizationMode::artistic) cmd_distill(p);
  {
    // Within `all` the sky is synthesized after stylization, so the text
    // losses must not pick up a panorama left over from an earlier run;
    // re-running `all` has to reproduce byte-identical artifacts.
    Pipeline fresh = p;
    fresh.cfg.stylization.clip_composite_sky = false;
    cmd_stylize(fresh, "");
  }
  cmd_sky(p);

  // Bake at the input texture's own resolution, then evaluate pivot views
  // rendered from the original texture against the stylized field.
  const TexturedScene scene = p.load_scene_from_config();
  cmd_bake(p, "", scene.texture.width(), scene.texture.height());
  const NeuralTextureField field = load_field_from_any_checkpoint(latest_checkpoint(p));
  const std::string dir_a = (p.out() / "eval" / "content").string();
  const std::string dir_b = (p.out() / "eval" / "stylized").string();
  const std::string dir_m = (p.out() / "eval" / "masks").string();
  render_eval_views(p, scene, field, dir_a, dir_b, dir_m);
  const FeatureExtractor fx = p.make_fx();
  const auto em = p.make_em();
  const MetricReport report = evaluate_dirs(dir_a, dir_b, dir_m, p.cfg.target_text, fx, *em);
  const std::string metrics_path = (p.out() / "metrics.json").string();
  std::ofstream(metrics_path) << report.to_json() << "\n";
  write_manifest((p.out() / "manifest_all.json").string(), "all", p.canonical_config,
                 [&] {
                   auto in = p.scene_inputs();
                   const auto style_in = p.style_inputs();
                   in.insert(in.end(), style_in.begin(), style_in.end());
                   return in;
                 }(),
                 {{"metrics", metrics_path, true},
                  {"baked_texture", (p.out() / "baked_texture.png").string(), true},
                  {"sky", (p.out() / "sky.png").string(), true}});
  fmt::print("pipeline complete: essim={:.4f} masked_lpips={:.4f} clip_score={:.4f}\n",
             report.essim, report.masked_lpips, report.clip_score);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citytex: urban mesh stylization via a neural texture field"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // make-fixture
  auto* fixture_cmd = app.add_subcommand("make-fixture", "Generate the procedural city fixture");
  std::string fixture_out = "fixture";
  int fixture_blocks = 3, fixture_tex = 1024, fixture_style = 512;
  std::uint64_t fixture_seed = 1;
  fixture_cmd->add_option("--out", fixture_out, "Output directory");
  fixture_cmd->add_option("--blocks", fixture_blocks, "Block grid size");
  fixture_cmd->add_option("--texture-size", fixture_tex, "Texture resolution");
  fixture_cmd->add_option("--style-size", fixture_style, "Style image resolution");
  fixture_cmd->add_option("--seed", fixture_seed, "Random seed");

  std::string config_path;
  auto add_config = [&config_path](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration JSON")->required();
  };

  auto* plan_cmd = app.add_subcommand("plan-views", "Plan pivot views and export them");
  add_config(plan_cmd);
  auto* distill_cmd = app.add_subcommand("distill", "Distill the original texture into the field");
  add_config(distill_cmd);

  auto* stylize_cmd = app.add_subcommand("stylize", "Run joint progressive stylization");
  add_config(stylize_cmd);
  std::string stylize_mode, resume_path;
  stylize_cmd->add_option("--mode", stylize_mode,
                          "Override mode (photorealistic|artistic|edit_propagation)");
  stylize_cmd->add_option("--resume", resume_path, "Resume from a trainer checkpoint");

  auto* bake_cmd = app.add_subcommand("bake", "Bake the field into a conventional texture");
  add_config(bake_cmd);
  std::string bake_checkpoint;
  int bake_width = 2048, bake_height = 2048;
  bake_cmd->add_option("--checkpoint", bake_checkpoint, "Field or trainer checkpoint");
  bake_cmd->add_option("--width", bake_width, "Texture width");
  bake_cmd->add_option("--height", bake_height, "Texture height");

  auto* sky_cmd = app.add_subcommand("sky", "Synthesize the omnidirectional sky panorama");
  add_config(sky_cmd);

  auto* edit_cmd = app.add_subcommand("edit-propagate",
                                      "Propagate a 2D edited view into the texture field");
  add_config(edit_cmd);
  edit_cmd->add_option("--resume", resume_path, "Resume from a trainer checkpoint");

  auto* eval_cmd = app.add_subcommand("eval", "Compute metrics over paired view directories");
  std::string eval_a, eval_b, eval_masks, eval_prompt, eval_out;
  double eval_width_scale = 1.0;
  std::uint64_t eval_feature_seed = 205;
  eval_cmd->add_option("--views-a", eval_a, "Content/reference views")->required();
  eval_cmd->add_option("--views-b", eval_b, "Stylized views")->required();
  eval_cmd->add_option("--masks", eval_masks, "Foreground masks")->required();
  eval_cmd->add_option("--prompt", eval_prompt, "Target text prompt")->required();
  eval_cmd->add_option("--out", eval_out, "Metrics JSON output path");
  eval_cmd->add_option("--feature-width-scale", eval_width_scale, "Backbone width scale");
  eval_cmd->add_option("--feature-seed", eval_feature_seed, "Backbone init seed");

  auto* all_cmd = app.add_subcommand("all", "plan -> distill -> stylize -> sky -> bake -> eval");
  add_config(all_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fixture_cmd->parsed()) {
      cmd_make_fixture(fixture_out, fixture_blocks, fixture_tex, fixture_style, fixture_seed);
      return 0;
    }
    if (eval_cmd->parsed()) {
      cmd_eval(eval_a, eval_b, eval_masks, eval_prompt, eval_out, eval_width_scale,
               eval_feature_seed);
      return 0;
    }

    Pipeline p = load_pipeline(config_path);
    if (stylize_cmd->parsed() && !stylize_mode.empty()) {
      p.cfg.mode = stylize_mode;
      p.cfg.stylization.mode = parse_mode(stylize_mode);
      if (!p.cfg.has_weight_overrides)
        p.cfg.stylization.weights = select_mode_weights(p.cfg.stylization.mode);
      p.cfg.validate();
    }
    if (edit_cmd->parsed()) {
      p.cfg.mode = "edit_propagation";
      p.cfg.stylization.mode = StylizationMode::edit_propagation;
      if (!p.cfg.has_weight_overrides)
        p.cfg.stylization.weights = select_mode_weights(p.cfg.stylization.mode);
      p.cfg.validate();
    }

    if (plan_cmd->parsed()) cmd_plan_views(p);
    else if (distill_cmd->parsed()) cmd_distill(p);
    else if (stylize_cmd->parsed() || edit_cmd->parsed()) cmd_stylize(p, resume_path);
    else if (bake_cmd->parsed()) cmd_bake(p, bake_checkpoint, bake_width, bake_height);
    else if (sky_cmd->parsed()) cmd_sky(p);
    else if (all_cmd->parsed()) cmd_all(p);
  } catch (const Error& e) {
    const char* kind = "runtime";
    switch (e.code()) {
      case Error::Code::config: kind = "config"; break;
      case Error::Code::validation: kind = "validation"; break;
      case Error::Code::io: kind = "io"; break;
      case Error::Code::numeric: kind = "numeric"; break;
      case Error::Code::unavailable: kind = "unavailable"; break;
    }
    std::cerr << fmt::format("error: {}: {}\n", kind, e.what());
    return e.code() == Error::Code::config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("error: runtime: {}\n", e.what());
    return 3;
  }
  return 0;
}
