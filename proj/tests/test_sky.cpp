/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/metrics.hpp"
#include "citytex/sky.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace citytex;

namespace {

EquirectCanvas smooth_canvas(int h_lat) {
  EquirectCanvas canvas;
  canvas.latent = Image(3, h_lat, 2 * h_lat);
  for (int y = 0; y < h_lat; ++y)
    for (int x = 0; x < 2 * h_lat; ++x) {
      // Smooth in latitude and in wrapped longitude.
      const real lon = 2.0 * kPi * (x + 0.5) / (2 * h_lat);
      canvas.latent.at(0, y, x) = 0.5 + 0.4 * std::sin(lon);
      canvas.latent.at(1, y, x) = static_cast<real>(y) / h_lat;
      canvas.latent.at(2, y, x) = 0.25 + 0.2 * std::cos(lon);
    }
  return canvas;
}

StyleReference tiny_style(std::uint64_t seed) {
  StyleReference style;
  style.image = oracle::random_image(3, 32, 32, seed);
  style.segmentation = LabelImage(32, 32, 0);
  style.source_text = "day";
  style.target_text = "sunset";
  return style;
}

}  // namespace

TEST_SUITE_BEGIN("sky");

TEST_CASE("the window centered at the origin maps to the canvas center") {
  const EquirectCanvas canvas = smooth_canvas(64);
  BFoVWindow window;
  window.center_lon_deg = 0.0;
  window.center_lat_deg = 0.0;
  window.resolution = 49;  // odd so the center pixel sits on the axis

  Vec3 right, up;
  window.basis(&right, &up);
  const Vec3 dir = window.forward();
  real px, py;
  {
    // Reproduce the mapping used by the warps for the exact center ray.
    const real lon = std::atan2(dir.x(), dir.z());
    const real lat = std::asin(dir.y());
    px = (lon + kPi) / (2.0 * kPi) * canvas.lat_width() - 0.5;
    py = (kPi / 2.0 - lat) / kPi * canvas.lat_height() - 0.5;
  }
  CHECK(std::abs(px - (canvas.lat_width() / 2.0 - 0.5)) <= 0.5);
  CHECK(std::abs(py - (canvas.lat_height() / 2.0 - 0.5)) <= 0.5);
}

TEST_CASE("the default lattice needs its minimum window count") {
  const EquirectCanvas canvas = smooth_canvas(32);
  CHECK_THROWS_AS(sample_bfov_windows(canvas, 4), Error);
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  CHECK(windows.size() == kMinSkyWindows);
  Rng rng(1);
  const std::vector<BFoVWindow> extra = sample_bfov_windows(canvas, 30, &rng);
  CHECK(extra.size() == 30);
}

TEST_CASE("every latent texel is covered by the default lattice") {
  const EquirectCanvas canvas = smooth_canvas(48);
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  Image accum(3, canvas.lat_height(), canvas.lat_width());
  Image weight(1, canvas.lat_height(), canvas.lat_width());
  for (const BFoVWindow& w : windows) {
    const Image tile = warp_equirect_to_perspective(canvas.latent, w);
    warp_perspective_to_equirect(tile, w, accum, weight);
  }
  for (std::size_t i = 0; i < weight.plane_size(); ++i) CHECK(weight.plane(0)[i] > 0.0);
}

TEST_CASE("adjacent lattice windows share overlap") {
  const EquirectCanvas canvas = smooth_canvas(32);
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  // Scatter weights of two adjacent equator windows; overlapping texels get
  // contributions from both.
  Image accum(3, canvas.lat_height(), canvas.lat_width());
  Image w0(1, canvas.lat_height(), canvas.lat_width());
  Image w1(1, canvas.lat_height(), canvas.lat_width());
  const Image t0 = warp_equirect_to_perspective(canvas.latent, windows[8]);
  const Image t1 = warp_equirect_to_perspective(canvas.latent, windows[9]);
  warp_perspective_to_equirect(t0, windows[8], accum, w0);
  warp_perspective_to_equirect(t1, windows[9], accum, w1);
  std::size_t both = 0;
  for (std::size_t i = 0; i < w0.plane_size(); ++i)
    if (w0.plane(0)[i] > 0.0 && w1.plane(0)[i] > 0.0) ++both;
  CHECK(both > 0);
}

TEST_CASE("gather of a constant canvas is exactly constant") {
  EquirectCanvas canvas;
  canvas.latent = Image(3, 32, 64, 0.625);
  BFoVWindow window{30.0, 20.0, 90.0, 24};
  const Image tile = warp_equirect_to_perspective(canvas.latent, window);
  for (const real v : tile.data()) CHECK(v == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("rotating a window by ninety degrees equals shifting the canvas") {
  const EquirectCanvas canvas = smooth_canvas(32);
  Image shifted(3, 32, 64);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 64; ++x)
        shifted.at(c, y, x) = canvas.latent.at(c, y, (x + 16) % 64);  // 90 deg of longitude

  BFoVWindow base{0.0, 10.0, 90.0, 20};
  BFoVWindow rotated{90.0, 10.0, 90.0, 20};
  const Image tile_rotated = warp_equirect_to_perspective(canvas.latent, rotated);
  const Image tile_shifted = warp_equirect_to_perspective(shifted, base);
  CHECK(mean_abs_diff(tile_rotated, tile_shifted) <= 1e-9);
}

TEST_CASE("gather followed by scatter keeps a smooth canvas within tight bounds") {
  const EquirectCanvas canvas = smooth_canvas(48);
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  Image accum(3, canvas.lat_height(), canvas.lat_width());
  Image weight(1, canvas.lat_height(), canvas.lat_width());
  for (const BFoVWindow& w : windows) {
    const Image tile = warp_equirect_to_perspective(canvas.latent, w);
    warp_perspective_to_equirect(tile, w, accum, weight);
  }
  real err_offpole = 0.0;
  std::size_t n = 0;
  for (int y = 4; y < canvas.lat_height() - 4; ++y)
    for (int x = 0; x < canvas.lat_width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * canvas.lat_width() + x;
      for (int c = 0; c < 3; ++c) {
        err_offpole += std::abs(accum.plane(c)[i] / weight.plane(0)[i] -
                                canvas.latent.plane(c)[i]);
        ++n;
      }
    }
  CHECK(err_offpole / n <= 2.0 / 255.0);
}

TEST_CASE("the identity backend leaves a smooth canvas nearly unchanged per step") {
  EquirectCanvas canvas = smooth_canvas(48);
  const Image before = canvas.latent;
  const IdentityBackend backend;
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  joint_denoise_step(canvas, windows, backend, 0, "prompt");
  CHECK(mean_abs_diff(before, canvas.latent) <= 2.0 / 255.0);
}

TEST_CASE("a constant backend overwrites the canvas in one step") {
  EquirectCanvas canvas = smooth_canvas(32);
  const ConstantBackend backend(0.71);
  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, kMinSkyWindows);
  joint_denoise_step(canvas, windows, backend, 0, "prompt");
  for (const real v : canvas.latent.data()) CHECK(v == doctest::Approx(0.71).epsilon(1e-12));
}

TEST_CASE("the toy backend converges to its analytic fixed point") {
  const ToyDenoiser backend(7);
  const StyleReference style = tiny_style(1);
  GuidanceConfig guidance;
  guidance.weight = 0.0;
  const Image sky = synthesize_sky(style, backend, guidance, 50, 11, 64);
  CHECK(sky.width() == 2 * sky.height());
  for (int c = 0; c < 3; ++c) {
    const real target = backend.target()[c];
    for (std::size_t i = 0; i < sky.plane_size(); ++i)
      CHECK(std::abs(sky.plane(c)[i] - target) <= 2.0 / 255.0);
  }
}

TEST_CASE("synthesis with a fixed seed is bit-reproducible") {
  const ToyDenoiser backend(3);
  const StyleReference style = tiny_style(2);
  GuidanceConfig guidance;
  guidance.weight = 0.0;
  const Image a = synthesize_sky(style, backend, guidance, 12, 5, 32);
  const Image b = synthesize_sky(style, backend, guidance, 12, 5, 32);
  CHECK(a.data() == b.data());
  const Image c = synthesize_sky(style, backend, guidance, 12, 6, 32);
  CHECK(a.data() != c.data());
}

TEST_CASE("the longitude seam stays continuous") {
  const ToyDenoiser backend(5);
  const StyleReference style = tiny_style(3);
  GuidanceConfig guidance;
  guidance.weight = 0.0;
  const Image sky = synthesize_sky(style, backend, guidance, 40, 7, 48);
  real seam = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < sky.height(); ++y)
      seam += std::abs(sky.at(c, y, 0) - sky.at(c, y, sky.width() - 1));
  seam /= 3.0 * sky.height();
  CHECK(seam <= 2.0 / 255.0);
}

TEST_CASE("perceptual guidance pulls the panorama toward the reference") {
  FeatureExtractorConfig fcfg;
  fcfg.width_scale = 0.0625;
  const FeatureExtractor fx(fcfg);
  StyleReference style = tiny_style(4);
  // A strongly colored reference distinct from the toy fixed point.
  for (std::size_t i = 0; i < style.image.plane_size(); ++i) {
    style.image.plane(0)[i] = 0.9;
    style.image.plane(1)[i] = 0.1;
    style.image.plane(2)[i] = 0.2;
  }
  const ToyDenoiser backend(9, 0.05);

  GuidanceConfig off;
  off.weight = 0.0;
  GuidanceConfig on;
  on.weight = 0.5;
  on.interval = 2;
  on.reference = &style.image;
  on.fx = &fx;

  const Image plain = synthesize_sky(style, backend, off, 16, 13, 32);
  const Image guided = synthesize_sky(style, backend, on, 16, 13, 32);

  const Image ref_plain = resize_bilinear(style.image, plain.height(), plain.width());
  const real d_plain = perceptual_distance(plain, ref_plain, fx);
  const real d_guided = perceptual_distance(guided, ref_plain, fx);
  CHECK(d_guided < d_plain);
}

TEST_CASE("unknown backends fail with a helpful message") {
  CHECK_THROWS_WITH_AS(make_denoiser_backend("latent-diffusion-v9"), doctest::Contains("plug"),
                       Error);
}

TEST_CASE("cube faces render from the equirect image") {
  const Image eq = smooth_canvas(32).latent;
  const Image face = equirect_face(eq, Vec3::UnitZ(), Vec3::UnitY(), 16);
  CHECK(face.height() == 16);
  CHECK(face.width() == 16);
  for (const real v : face.data()) CHECK(std::isfinite(v));
}

TEST_SUITE_END();
