/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/metrics.hpp"

#include <doctest.h>

#include "oracles.hpp"

using namespace citytex;

namespace {

FeatureExtractorConfig tiny_fx() {
  FeatureExtractorConfig cfg;
  cfg.width_scale = 0.0625;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("edge similarity of an image with itself is one") {
  const Image x = oracle::random_image(3, 32, 32, 1);
  CHECK(essim(x, x) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("edge similarity is invariant to intensity inversion") {
  // Gradient magnitudes of x and 1-x coincide, so the edge maps agree.
  Image x(3, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x_i = 0; x_i < 32; ++x_i)
      for (int c = 0; c < 3; ++c) x.at(c, y, x_i) = ((x_i / 4 + y / 4) % 2) ? 1.0 : 0.0;
  Image inverted = x;
  for (real& v : inverted.data()) v = 1.0 - v;
  CHECK(essim(x, inverted) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("edge similarity is symmetric and rejects dimension mismatches") {
  const Image a = oracle::random_image(3, 24, 24, 2);
  const Image b = oracle::random_image(3, 24, 24, 3);
  CHECK(essim(a, b) == doctest::Approx(essim(b, a)).epsilon(1e-12));
  CHECK(essim(a, b) < 1.0);
  const Image c = oracle::random_image(3, 16, 24, 4);
  CHECK_THROWS_AS(essim(a, c), Error);
}

TEST_CASE("masked perceptual distance vanishes at identity") {
  const FeatureExtractor fx{tiny_fx()};
  const Image x = oracle::random_image(3, 16, 16, 5);
  std::vector<std::uint8_t> mask(x.plane_size(), 1);
  CHECK(masked_lpips(x, x, mask, fx) <= 1e-12);
}

TEST_CASE("masked perceptual distance is symmetric") {
  const FeatureExtractor fx{tiny_fx()};
  const Image a = oracle::random_image(3, 16, 16, 6);
  const Image b = oracle::random_image(3, 16, 16, 7);
  std::vector<std::uint8_t> mask(a.plane_size(), 0);
  for (std::size_t i = 0; i < mask.size(); i += 2) mask[i] = 1;
  CHECK(masked_lpips(a, b, mask, fx) ==
        doctest::Approx(masked_lpips(b, a, mask, fx)).epsilon(1e-12));
}

TEST_CASE("an empty mask leaves the metric undefined") {
  const FeatureExtractor fx{tiny_fx()};
  const Image a = oracle::random_image(3, 16, 16, 8);
  const std::vector<std::uint8_t> mask(a.plane_size(), 0);
  CHECK_THROWS_AS(masked_lpips(a, a, mask, fx), Error);
}

TEST_CASE("changes strictly outside the mask do not move the metric") {
  const FeatureExtractor fx{tiny_fx()};
  const Image a = oracle::random_image(3, 16, 16, 9);
  Image b = oracle::random_image(3, 16, 16, 10);
  std::vector<std::uint8_t> mask(a.plane_size(), 0);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) mask[static_cast<std::size_t>(y) * 16 + x] = 1;
  const real before = masked_lpips(a, b, mask, fx);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x)
      for (int c = 0; c < 3; ++c) b.at(c, y, x) = 1.0 - b.at(c, y, x);
  CHECK(masked_lpips(a, b, mask, fx) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("guided perceptual distance exposes a descent direction") {
  const FeatureExtractor fx{tiny_fx()};
  const Image target = oracle::random_image(3, 16, 16, 11);
  Image x = oracle::random_image(3, 16, 16, 12);
  Image grad;
  const real before = perceptual_distance(x, target, fx, &grad);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] -= 0.05 * grad.data()[i];
  CHECK(perceptual_distance(x, target, fx) < before);
}

TEST_CASE("image-text score is a bounded cosine") {
  const auto em = make_embedding_model("procedural", 32, 3);
  Rng rng(13);
  for (int i = 0; i < 8; ++i) {
    const Image img = oracle::random_image(3, 12, 12, rng.next_u64());
    const real s = clip_score(img, "evening city skyline", *em);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
  CHECK_THROWS_AS(clip_score(oracle::random_image(3, 8, 8, 1), "", *em), Error);
}

TEST_CASE("metric report serializes with the edge operator recorded") {
  MetricReport report;
  report.essim = 0.5;
  report.masked_lpips = 0.25;
  report.clip_score = 0.1;
  report.view_count = 2;
  report.validate();
  const std::string json = report.to_json();
  CHECK(json.find("sobel3x3-luma") != std::string::npos);
  CHECK(json.find("masked_lpips") != std::string::npos);
}

TEST_SUITE_END();
