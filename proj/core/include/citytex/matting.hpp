/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"

#include <Eigen/SparseCore>

namespace citytex {

// Closed-form matting Laplacian of an RGB image: sparse, symmetric, PSD,
// with the constant vector in its null space. The quadratic form
// sum_channels v^T M v penalizes color changes that are not locally affine
// in the guide image.
struct MattingLaplacian {
  int height = 0;
  int width = 0;
  Eigen::SparseMatrix<real> matrix;  // (height*width)^2

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

MattingLaplacian matting_laplacian(const Image& rgb, int window_radius = 1, real eps = 1e-7);

// sum over channels of v^T M v with v the flattened channel of z. Throws on
// resolution mismatch; callers downsample z beforehand (differentiably, via
// resize_area) when it is larger than the Laplacian's working resolution.
real photorealism_loss(const Image& z, const MattingLaplacian& laplacian,
                       Image* d_z_accum = nullptr);

}  // namespace citytex
