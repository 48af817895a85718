/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/features.hpp"
#include "citytex/image.hpp"
#include "citytex/style_bank.hpp"

#include <memory>
#include <string>
#include <vector>

namespace citytex {

// Contract over a latent denoising model. The shipped backends are exact
// mocks (identity, constant, and a contractive toy model with an analytic
// fixed point); a pretrained latent diffusion model plugs in behind the
// same interface.
class DenoiserBackend {
public:
  virtual ~DenoiserBackend() = default;

  virtual std::string name() const = 0;
  virtual int latent_channels() const = 0;
  virtual int latent_scale() const = 0;  // decoded pixels per latent texel

  // Descending schedule; default is steps-1 .. 0.
  virtual std::vector<int> timesteps(int steps) const;

  virtual Image encode(const Image& rgb) const = 0;
  virtual Image decode(const Image& latent) const = 0;
  virtual void decode_vjp(const Image& latent, const Image& d_image,
                          Image& d_latent_accum) const = 0;
  virtual Image denoise_step(const Image& latent_tile, int t,
                             const std::string& prompt) const = 0;
};

class IdentityBackend final : public DenoiserBackend {
public:
  std::string name() const override { return "identity"; }
  int latent_channels() const override { return 3; }
  int latent_scale() const override { return 1; }
  Image encode(const Image& rgb) const override { return rgb; }
  Image decode(const Image& latent) const override { return latent; }
  void decode_vjp(const Image&, const Image& d_image, Image& d_latent_accum) const override;
  Image denoise_step(const Image& latent_tile, int, const std::string&) const override {
    return latent_tile;
  }
};

class ConstantBackend final : public DenoiserBackend {
public:
  explicit ConstantBackend(real value = 0.5) : value_(value) {}
  std::string name() const override { return "constant"; }
  int latent_channels() const override { return 3; }
  int latent_scale() const override { return 1; }
  Image encode(const Image& rgb) const override { return rgb; }
  Image decode(const Image& latent) const override { return latent; }
  void decode_vjp(const Image&, const Image& d_image, Image& d_latent_accum) const override;
  Image denoise_step(const Image& latent_tile, int, const std::string&) const override {
    return Image(latent_tile.channels(), latent_tile.height(), latent_tile.width(), value_);
  }

private:
  real value_;
};

// x' = x + rate * (target - x): a contraction toward a seeded per-channel
// constant, so the synthesized panorama has an analytic limit.
class ToyDenoiser final : public DenoiserBackend {
public:
  explicit ToyDenoiser(std::uint64_t seed = 7, real rate = 0.15);
  std::string name() const override { return "toy"; }
  int latent_channels() const override { return 3; }
  int latent_scale() const override { return 1; }
  Image encode(const Image& rgb) const override { return rgb; }
  Image decode(const Image& latent) const override { return latent; }
  void decode_vjp(const Image&, const Image& d_image, Image& d_latent_accum) const override;
  Image denoise_step(const Image& latent_tile, int, const std::string&) const override;

  const std::array<real, 3>& target() const { return target_; }

private:
  std::array<real, 3> target_;
  real rate_;
};

std::unique_ptr<DenoiserBackend> make_denoiser_backend(const std::string& name,
                                                       std::uint64_t seed = 7,
                                                       real constant_value = 0.5);

// A 90-degree perspective window on the sphere, sampled from / scattered to
// the equirectangular latent grid.
struct BFoVWindow {
  real center_lon_deg = 0.0;
  real center_lat_deg = 0.0;
  real fov_deg = 90.0;
  int resolution = 64;  // latent pixels per side

  Vec3 forward() const;
  // Orthonormal in-window axes; stable at the poles.
  void basis(Vec3* right, Vec3* up) const;
};

struct EquirectCanvas {
  Image latent;  // channels x H x 2H
  int scale = 1;

  int lat_height() const { return latent.height(); }
  int lat_width() const { return latent.width(); }
  void validate() const;
};

inline constexpr int kMinSkyWindows = 26;  // 3 latitude rings x 8 + 2 pole caps

// Near-uniform window lattice covering the whole sphere; additional windows
// beyond the lattice get random centers. Fewer than the lattice minimum is
// an error since full coverage could not be guaranteed.
std::vector<BFoVWindow> sample_bfov_windows(const EquirectCanvas& canvas, int n_windows,
                                            Rng* rng = nullptr);

// Gnomonic gather with bilinear sampling; longitude wraps.
Image warp_equirect_to_perspective(const Image& canvas, const BFoVWindow& window);
// Scatter-add of a tile through the same correspondence, accumulating
// bilinear weights for later normalization.
void warp_perspective_to_equirect(const Image& tile, const BFoVWindow& window, Image& accum,
                                  Image& weight);

// One joint step: gather every window, denoise it, scatter everything back
// and average per latent texel. Every texel must receive coverage.
void joint_denoise_step(EquirectCanvas& canvas, const std::vector<BFoVWindow>& windows,
                        const DenoiserBackend& backend, int t, const std::string& prompt);

struct GuidanceConfig {
  real weight = 0.1;
  int interval = 5;                      // apply every k denoising steps
  const Image* reference = nullptr;      // style image
  const FeatureExtractor* fx = nullptr;  // perceptual backbone

  void validate() const;
};

// Full synthesis: seeded latent noise, the joint multi-window schedule,
// periodic perceptual guidance toward the style image, final decode.
// output_height must be a multiple of the backend latent scale; the output
// is W = 2H equirectangular.
Image synthesize_sky(const StyleReference& style, const DenoiserBackend& backend,
                     const GuidanceConfig& guidance, int steps, std::uint64_t seed,
                     int output_height = 1024, const Image* init_latent = nullptr,
                     int n_windows = kMinSkyWindows);

// Gnomonic cube face render from an equirect image (fov 90, square).
Image equirect_face(const Image& equirect, const Vec3& forward, const Vec3& up, int size);
// Writes the six faces as <prefix>_{px,nx,py,ny,pz,nz}.png.
void export_cubemap(const Image& equirect, int face_size, const std::string& prefix);

}  // namespace citytex
