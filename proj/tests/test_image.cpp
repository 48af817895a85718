/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/image.hpp"
#include "citytex/image_io.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <filesystem>

using namespace citytex;

TEST_SUITE_BEGIN("image");

TEST_CASE("bilinear sampling reproduces texel values at texel centers") {
  const Image img = oracle::random_image(3, 7, 5, 42);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const real u = (x + 0.5) / img.width();
      const real v = (y + 0.5) / img.height();
      for (int c = 0; c < 3; ++c)
        CHECK(sample_bilinear(img, c, u, v) == doctest::Approx(img.at(c, y, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bilinear equals nearest on a checkerboard at texel centers") {
  Image img(1, 8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img.at(0, y, x) = (x + y) % 2 ? 1.0 : 0.0;
  LabelImage labels(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) labels.at(y, x) = static_cast<std::int16_t>((x + y) % 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const real u = (x + 0.5) / 8.0;
      const real v = (y + 0.5) / 8.0;
      CHECK(sample_bilinear(img, 0, u, v) == doctest::Approx(labels.at(y, x)));
      CHECK(sample_nearest(labels, u, v) == labels.at(y, x));
    }
}

TEST_CASE("area resize adjoint satisfies the inner-product identity") {
  const Image x = oracle::random_image(2, 9, 13, 7);
  const Image y = oracle::random_image(2, 4, 5, 8);
  const Image ax = resize_area(x, 4, 5);
  Image aty;
  resize_area_adjoint(y, 9, 13, aty);
  real lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) lhs += ax.data()[i] * y.data()[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x.data()[i] * aty.data()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("area downsample preserves the mean exactly") {
  const Image x = oracle::random_image(3, 16, 16, 3);
  const Image down = resize_area(x, 4, 4);
  real mean_x = 0.0, mean_d = 0.0;
  for (const real v : x.data()) mean_x += v;
  for (const real v : down.data()) mean_d += v;
  CHECK(mean_x / x.size() == doctest::Approx(mean_d / down.size()).epsilon(1e-12));
}

TEST_CASE("psnr of identical images is infinite and mse is zero") {
  const Image x = oracle::random_image(3, 6, 6, 1);
  CHECK(mse(x, x) == 0.0);
  CHECK(std::isinf(psnr(x, x)));
}

TEST_CASE("png roundtrip is exact up to 8-bit quantization") {
  const auto dir = std::filesystem::temp_directory_path() / "citytex_png_test";
  std::filesystem::create_directories(dir);
  const Image img = oracle::random_image(3, 17, 23, 11);
  const std::string path = (dir / "img.png").string();
  write_png(path, img);
  const Image back = read_png(path);
  REQUIRE(back.same_shape(img));
  CHECK(mean_abs_diff(img, back) <= 0.5 / 255.0 + 1e-9);
  // A second write of the decoded image is byte-stable.
  write_png(path, back);
  const Image again = read_png(path);
  CHECK(mean_abs_diff(back, again) == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("label png roundtrip preserves labels and the unlabeled sentinel") {
  const auto dir = std::filesystem::temp_directory_path() / "citytex_label_test";
  std::filesystem::create_directories(dir);
  LabelImage labels(5, 9);
  Rng rng(5);
  for (auto& v : labels.labels)
    v = rng.uniform01() < 0.2 ? LabelImage::kUnlabeled
                              : static_cast<std::int16_t>(rng.uniform_index(9));
  const std::string path = (dir / "labels.png").string();
  write_label_png(path, labels);
  const LabelImage back = read_label_png(path);
  CHECK(back.labels == labels.labels);
  std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
