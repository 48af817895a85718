/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/matting.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <vector>

namespace citytex {

MattingLaplacian matting_laplacian(const Image& rgb, int window_radius, real eps) {
  if (rgb.channels() != 3) throw Error::validation("matting laplacian expects an RGB image");
  const int H = rgb.height();
  const int W = rgb.width();
  const int r = window_radius;
  const int win = 2 * r + 1;
  const int wsize = win * win;
  if (H < win || W < win)
    throw Error::validation(fmt::format("image {}x{} smaller than the {}x{} window", W, H, win, win));

  using Triplet = Eigen::Triplet<real>;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(H - 2 * r) * (W - 2 * r) * wsize * wsize);

  std::vector<int> pix(wsize);
  std::vector<Vec3> colors(wsize);
  std::vector<Vec3> centered(wsize);

  for (int cy = r; cy < H - r; ++cy) {
    for (int cx = r; cx < W - r; ++cx) {
      int n = 0;
      Vec3 mean = Vec3::Zero();
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int y = cy + dy;
          const int x = cx + dx;
          pix[n] = y * W + x;
          colors[n] = Vec3(rgb.at(0, y, x), rgb.at(1, y, x), rgb.at(2, y, x));
          mean += colors[n];
          ++n;
        }
      }
      mean /= wsize;

      Mat3 cov = Mat3::Zero();
      for (int i = 0; i < wsize; ++i) {
        centered[i] = colors[i] - mean;
        cov += centered[i] * centered[i].transpose();
      }
      cov /= wsize;

      const Mat3 reg = cov + (eps / wsize) * Mat3::Identity();
      const Mat3 inv = reg.inverse();

      // Emit the upper triangle and mirror it so the assembled matrix is
      // symmetric bit for bit, not just analytically.
      for (int i = 0; i < wsize; ++i) {
        const Vec3 a = inv * centered[i];
        for (int j = i; j < wsize; ++j) {
          const real val =
              (i == j ? 1.0 : 0.0) - (1.0 + a.dot(centered[j])) / static_cast<real>(wsize);
          triplets.emplace_back(pix[i], pix[j], val);
          if (j != i) triplets.emplace_back(pix[j], pix[i], val);
        }
      }
    }
  }

  MattingLaplacian lap;
  lap.height = H;
  lap.width = W;
  lap.matrix.resize(H * W, H * W);
  lap.matrix.setFromTriplets(triplets.begin(), triplets.end());
  lap.matrix.makeCompressed();
  return lap;
}

real photorealism_loss(const Image& z, const MattingLaplacian& laplacian, Image* d_z_accum) {
  if (z.height() != laplacian.height || z.width() != laplacian.width)
    throw Error::validation(
        fmt::format("image {}x{} does not match the laplacian working resolution {}x{}",
                    z.width(), z.height(), laplacian.width, laplacian.height));
  if (d_z_accum && d_z_accum->empty())
    *d_z_accum = Image(z.channels(), z.height(), z.width());

  using Vector = Eigen::Matrix<real, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(laplacian.pixel_count());
  real loss = 0.0;
  for (int c = 0; c < z.channels(); ++c) {
    Eigen::Map<const Vector> v(z.plane(c), n);
    const Vector mv = laplacian.matrix * v;
    loss += v.dot(mv);
    if (d_z_accum) {
      Eigen::Map<Vector> g(d_z_accum->plane(c), n);
      g += 2.0 * mv;  // matrix is symmetric
    }
  }
  return loss;
}

}  // namespace citytex
