/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace citytex {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::vector<unsigned char> decode_png(const std::string& path, int* width, int* height,
                                      int* channels) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error::io("cannot open PNG: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error::io("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error::io("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error::io("failed to decode PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  const int ch = png_get_channels(png, info);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(w) * h * ch);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * ch;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  *width = static_cast<int>(w);
  *height = static_cast<int>(h);
  *channels = ch;
  return pixels;
}

void encode_png(const std::string& path, const unsigned char* pixels, int width, int height,
                int channels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error::io("cannot open PNG for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error::io("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error::io("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error::io("failed to encode PNG: " + path);
  }

  png_init_io(png, fp.get());
  const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, width, height, 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * width * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline unsigned char to_u8(real v) {
  const real c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

Image read_png(const std::string& path) {
  int w, h, ch;
  const std::vector<unsigned char> pixels = decode_png(path, &w, &h, &ch);
  Image img(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const unsigned char* px = pixels.data() + (static_cast<std::size_t>(y) * w + x) * ch;
      for (int c = 0; c < 3; ++c) {
        const unsigned char v = ch == 1 ? px[0] : px[c];
        img.at(c, y, x) = v / 255.0;
      }
    }
  }
  return img;
}

void write_png(const std::string& path, const Image& img) {
  if (img.channels() != 3 && img.channels() != 1)
    throw Error::io("write_png expects 1 or 3 channels");
  const int ch = img.channels();
  std::vector<unsigned char> pixels(static_cast<std::size_t>(img.height()) * img.width() * ch);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < ch; ++c)
        pixels[(static_cast<std::size_t>(y) * img.width() + x) * ch + c] = to_u8(img.at(c, y, x));
  encode_png(path, pixels.data(), img.width(), img.height(), ch);
}

LabelImage read_label_png(const std::string& path) {
  int w, h, ch;
  const std::vector<unsigned char> pixels = decode_png(path, &w, &h, &ch);
  LabelImage labels(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const unsigned char v = pixels[(static_cast<std::size_t>(y) * w + x) * ch];
      labels.at(y, x) = v == 255 ? LabelImage::kUnlabeled : static_cast<std::int16_t>(v);
    }
  }
  return labels;
}

void write_label_png(const std::string& path, const LabelImage& labels) {
  std::vector<unsigned char> pixels(static_cast<std::size_t>(labels.height) * labels.width);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::int16_t v = labels.labels[i];
    if (v > 254) throw Error::io("label index exceeds 8-bit PNG range");
    pixels[i] = v == LabelImage::kUnlabeled ? 255 : static_cast<unsigned char>(v);
  }
  encode_png(path, pixels.data(), labels.width, labels.height, 1);
}

}  // namespace citytex
