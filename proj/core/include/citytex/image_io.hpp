/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"

#include <string>

namespace citytex {

// 8-bit PNG I/O. RGB images are stored row 0 = v 0 (top-down), matching the
// in-memory convention, so read(write(x)) is exact up to 8-bit quantization.
Image read_png(const std::string& path);                 // 3 channels in [0,1]
void write_png(const std::string& path, const Image& img);

// Label maps persist as single-channel 8-bit PNG; 255 encodes "unlabeled".
LabelImage read_label_png(const std::string& path);
void write_label_png(const std::string& path, const LabelImage& labels);

}  // namespace citytex
