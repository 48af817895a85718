/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/sky.hpp"

#include "citytex/image_io.hpp"
#include "citytex/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace citytex {

std::vector<int> DenoiserBackend::timesteps(int steps) const {
  if (steps < 1) throw Error::validation("denoising schedule needs at least one step");
  std::vector<int> out(steps);
  for (int i = 0; i < steps; ++i) out[i] = steps - 1 - i;
  return out;
}

void IdentityBackend::decode_vjp(const Image&, const Image& d_image,
                                 Image& d_latent_accum) const {
  if (d_latent_accum.empty())
    d_latent_accum = Image(d_image.channels(), d_image.height(), d_image.width());
  for (std::size_t i = 0; i < d_image.size(); ++i)
    d_latent_accum.data()[i] += d_image.data()[i];
}

void ConstantBackend::decode_vjp(const Image&, const Image& d_image,
                                 Image& d_latent_accum) const {
  if (d_latent_accum.empty())
    d_latent_accum = Image(d_image.channels(), d_image.height(), d_image.width());
  for (std::size_t i = 0; i < d_image.size(); ++i)
    d_latent_accum.data()[i] += d_image.data()[i];
}

ToyDenoiser::ToyDenoiser(std::uint64_t seed, real rate) : rate_(rate) {
  Rng rng(seed);
  for (real& t : target_) t = rng.uniform(0.15, 0.85);
}

void ToyDenoiser::decode_vjp(const Image&, const Image& d_image, Image& d_latent_accum) const {
  if (d_latent_accum.empty())
    d_latent_accum = Image(d_image.channels(), d_image.height(), d_image.width());
  for (std::size_t i = 0; i < d_image.size(); ++i)
    d_latent_accum.data()[i] += d_image.data()[i];
}

Image ToyDenoiser::denoise_step(const Image& latent_tile, int, const std::string&) const {
  Image out(latent_tile.channels(), latent_tile.height(), latent_tile.width());
  for (int c = 0; c < latent_tile.channels(); ++c) {
    const real target = target_[c % 3];
    const real* ip = latent_tile.plane(c);
    real* op = out.plane(c);
    for (std::size_t i = 0; i < out.plane_size(); ++i)
      op[i] = ip[i] + rate_ * (target - ip[i]);
  }
  return out;
}

std::unique_ptr<DenoiserBackend> make_denoiser_backend(const std::string& name,
                                                       std::uint64_t seed, real constant_value) {
  if (name == "identity") return std::make_unique<IdentityBackend>();
  if (name == "constant") return std::make_unique<ConstantBackend>(constant_value);
  if (name == "toy") return std::make_unique<ToyDenoiser>(seed);
  throw Error::unavailable(
      "unknown denoiser backend '" + name +
      "'; available: identity, constant, toy (implement DenoiserBackend to plug in a "
      "pretrained latent diffusion model)");
}

namespace {

Vec3 direction_from_lonlat(real lon_deg, real lat_deg) {
  const real lon = deg_to_rad(lon_deg);
  const real lat = deg_to_rad(lat_deg);
  return Vec3(std::cos(lat) * std::sin(lon), std::sin(lat), std::cos(lat) * std::cos(lon));
}

// Continuous equirect pixel coordinates of a direction; x in [-0.5, W-0.5).
void lonlat_pixel(const Vec3& dir, int width, int height, real* px, real* py) {
  const real lon = std::atan2(dir.x(), dir.z());
  const real lat = std::asin(std::clamp<real>(dir.y(), -1.0, 1.0));
  *px = (lon + kPi) / (2.0 * kPi) * width - 0.5;
  *py = (kPi / 2.0 - lat) / kPi * height - 0.5;
}

inline int wrap_x(int x, int w) {
  x %= w;
  return x < 0 ? x + w : x;
}
inline int clamp_y(int y, int h) { return y < 0 ? 0 : (y >= h ? h - 1 : y); }

struct Tap4 {
  int x0, x1, y0, y1;
  real w00, w01, w10, w11;
};

Tap4 wrap_tap(real px, real py, int w, int h) {
  const real xf = std::floor(px);
  const real yf = std::floor(py);
  const real wx = px - xf;
  const real wy = py - yf;
  Tap4 t;
  t.x0 = wrap_x(static_cast<int>(xf), w);
  t.x1 = wrap_x(static_cast<int>(xf) + 1, w);
  t.y0 = clamp_y(static_cast<int>(yf), h);
  t.y1 = clamp_y(static_cast<int>(yf) + 1, h);
  t.w00 = (1.0 - wx) * (1.0 - wy);
  t.w01 = wx * (1.0 - wy);
  t.w10 = (1.0 - wx) * wy;
  t.w11 = wx * wy;
  return t;
}

}  // namespace

Vec3 BFoVWindow::forward() const { return direction_from_lonlat(center_lon_deg, center_lat_deg); }

void BFoVWindow::basis(Vec3* right, Vec3* up) const {
  const Vec3 fwd = forward();
  const Vec3 ref = std::abs(fwd.y()) > 0.99 ? Vec3::UnitZ() : Vec3::UnitY();
  *right = ref.cross(fwd).normalized();  // +x of the window points east
  *up = fwd.cross(*right);
}

void EquirectCanvas::validate() const {
  if (latent.empty()) throw Error::validation("empty panorama canvas");
  if (lat_width() != 2 * lat_height())
    throw Error::validation(fmt::format("equirect canvas must satisfy W = 2H, got {}x{}",
                                        lat_width(), lat_height()));
}

std::vector<BFoVWindow> sample_bfov_windows(const EquirectCanvas& canvas, int n_windows,
                                            Rng* rng) {
  canvas.validate();
  if (n_windows < kMinSkyWindows)
    throw Error::validation(fmt::format(
        "{} windows cannot cover the sphere with 90-degree views; minimum is {}", n_windows,
        kMinSkyWindows));

  // Window sampling density must exceed the latent texel density or gather
  // leaves gaps at window centers, where gnomonic samples are sparsest.
  const int resolution = std::max(16, (canvas.lat_height() * 3) / 4);

  std::vector<BFoVWindow> windows;
  for (const real lat : {-60.0, 0.0, 60.0})
    for (int k = 0; k < 8; ++k)
      windows.push_back({k * 45.0, lat, 90.0, resolution});
  windows.push_back({0.0, 90.0, 90.0, resolution});
  windows.push_back({0.0, -90.0, 90.0, resolution});

  for (int i = static_cast<int>(windows.size()); i < n_windows; ++i) {
    if (!rng)
      throw Error::validation("extra windows beyond the fixed lattice require a random stream");
    const real lon = rng->uniform(-180.0, 180.0);
    const real lat = rad_to_deg(std::asin(rng->uniform(-1.0, 1.0)));
    windows.push_back({lon, lat, 90.0, resolution});
  }
  return windows;
}

Image warp_equirect_to_perspective(const Image& canvas, const BFoVWindow& window) {
  const int S = window.resolution;
  Image tile(canvas.channels(), S, S);
  Vec3 right, up;
  window.basis(&right, &up);
  const Vec3 fwd = window.forward();
  const real tan_half = std::tan(deg_to_rad(window.fov_deg) * 0.5);
  const int W = canvas.width();
  const int H = canvas.height();

  for (int j = 0; j < S; ++j) {
    const real b = (1.0 - 2.0 * (j + 0.5) / S) * tan_half;
    for (int i = 0; i < S; ++i) {
      const real a = (2.0 * (i + 0.5) / S - 1.0) * tan_half;
      const Vec3 dir = (fwd + a * right + b * up).normalized();
      real px, py;
      lonlat_pixel(dir, W, H, &px, &py);
      const Tap4 t = wrap_tap(px, py, W, H);
      for (int c = 0; c < canvas.channels(); ++c) {
        const real* p = canvas.plane(c);
        tile.at(c, j, i) = t.w00 * p[static_cast<std::size_t>(t.y0) * W + t.x0] +
                           t.w01 * p[static_cast<std::size_t>(t.y0) * W + t.x1] +
                           t.w10 * p[static_cast<std::size_t>(t.y1) * W + t.x0] +
                           t.w11 * p[static_cast<std::size_t>(t.y1) * W + t.x1];
      }
    }
  }
  return tile;
}

void warp_perspective_to_equirect(const Image& tile, const BFoVWindow& window, Image& accum,
                                  Image& weight) {
  const int S = window.resolution;
  if (tile.height() != S || tile.width() != S)
    throw Error::validation("tile resolution does not match the window");
  Vec3 right, up;
  window.basis(&right, &up);
  const Vec3 fwd = window.forward();
  const real tan_half = std::tan(deg_to_rad(window.fov_deg) * 0.5);
  const int W = accum.width();
  const int H = accum.height();

  for (int j = 0; j < S; ++j) {
    const real b = (1.0 - 2.0 * (j + 0.5) / S) * tan_half;
    for (int i = 0; i < S; ++i) {
      const real a = (2.0 * (i + 0.5) / S - 1.0) * tan_half;
      const Vec3 dir = (fwd + a * right + b * up).normalized();
      real px, py;
      lonlat_pixel(dir, W, H, &px, &py);
      const Tap4 t = wrap_tap(px, py, W, H);
      const std::size_t i00 = static_cast<std::size_t>(t.y0) * W + t.x0;
      const std::size_t i01 = static_cast<std::size_t>(t.y0) * W + t.x1;
      const std::size_t i10 = static_cast<std::size_t>(t.y1) * W + t.x0;
      const std::size_t i11 = static_cast<std::size_t>(t.y1) * W + t.x1;
      for (int c = 0; c < tile.channels(); ++c) {
        const real v = tile.at(c, j, i);
        real* p = accum.plane(c);
        p[i00] += t.w00 * v;
        p[i01] += t.w01 * v;
        p[i10] += t.w10 * v;
        p[i11] += t.w11 * v;
      }
      real* wp = weight.plane(0);
      wp[i00] += t.w00;
      wp[i01] += t.w01;
      wp[i10] += t.w10;
      wp[i11] += t.w11;
    }
  }
}

void joint_denoise_step(EquirectCanvas& canvas, const std::vector<BFoVWindow>& windows,
                        const DenoiserBackend& backend, int t, const std::string& prompt) {
  canvas.validate();
  if (windows.empty()) throw Error::validation("no windows to denoise");

  Image accum(canvas.latent.channels(), canvas.lat_height(), canvas.lat_width());
  Image weight(1, canvas.lat_height(), canvas.lat_width());

  for (std::size_t w = 0; w < windows.size(); ++w) {
    Image tile = warp_equirect_to_perspective(canvas.latent, windows[w]);
    try {
      tile = backend.denoise_step(tile, t, prompt);
    } catch (const std::exception& e) {
      throw Error::numeric(fmt::format("denoiser backend failed on window {}: {}", w, e.what()));
    }
    warp_perspective_to_equirect(tile, windows[w], accum, weight);
  }

  for (std::size_t i = 0; i < weight.plane_size(); ++i) {
    const real wv = weight.plane(0)[i];
    if (wv <= 0.0)
      throw Error::numeric(fmt::format("latent texel {} received no window coverage", i));
    for (int c = 0; c < accum.channels(); ++c) accum.plane(c)[i] /= wv;
  }
  canvas.latent = std::move(accum);
}

void GuidanceConfig::validate() const {
  if (weight < 0.0) throw Error::validation("guidance weight must be nonnegative");
  if (interval < 1) throw Error::validation("guidance interval must be >= 1");
  if (weight > 0.0 && (reference == nullptr || fx == nullptr))
    throw Error::validation("guidance requires a reference image and a feature backbone");
}

Image synthesize_sky(const StyleReference& style, const DenoiserBackend& backend,
                     const GuidanceConfig& guidance, int steps, std::uint64_t seed,
                     int output_height, const Image* init_latent, int n_windows) {
  guidance.validate();
  const int scale = backend.latent_scale();
  if (output_height % scale != 0 || output_height < scale)
    throw Error::validation(
        fmt::format("output height {} is not a multiple of the backend latent scale {}",
                    output_height, scale));
  const int h_lat = output_height / scale;
  const int w_lat = 2 * h_lat;

  EquirectCanvas canvas;
  canvas.scale = scale;
  Rng window_rng(seed ^ 0xB0F5ull);
  if (init_latent) {
    if (init_latent->channels() != backend.latent_channels() || init_latent->height() != h_lat ||
        init_latent->width() != w_lat)
      throw Error::validation("initial latent does not match the canvas dimensions");
    canvas.latent = *init_latent;
  } else {
    canvas.latent = Image(backend.latent_channels(), h_lat, w_lat);
    Rng rng(seed);
    for (real& v : canvas.latent.data()) v = rng.normal();
  }

  const std::vector<BFoVWindow> windows = sample_bfov_windows(canvas, n_windows, &window_rng);
  const std::vector<int> schedule = backend.timesteps(steps);
  const std::string& prompt = style.target_text;

  for (std::size_t k = 0; k < schedule.size(); ++k) {
    joint_denoise_step(canvas, windows, backend, schedule[k], prompt);

    const bool guide = guidance.weight > 0.0 && ((k + 1) % guidance.interval == 0);
    if (!guide) continue;

    // Perceptual pull toward the reference: one gradient step per window on
    // the decoded tile, scattered back and averaged like a denoising pass.
    Image accum(canvas.latent.channels(), h_lat, w_lat);
    Image weight(1, h_lat, w_lat);
    for (const BFoVWindow& window : windows) {
      Image tile = warp_equirect_to_perspective(canvas.latent, window);
      const Image decoded = backend.decode(tile);
      const Image reference =
          resize_bilinear(*guidance.reference, decoded.height(), decoded.width());
      Image d_decoded;
      perceptual_distance(decoded, reference, *guidance.fx, &d_decoded);
      Image d_tile;
      backend.decode_vjp(tile, d_decoded, d_tile);
      for (std::size_t i = 0; i < tile.size(); ++i)
        tile.data()[i] -= guidance.weight * d_tile.data()[i];
      warp_perspective_to_equirect(tile, window, accum, weight);
    }
    for (std::size_t i = 0; i < weight.plane_size(); ++i) {
      const real wv = weight.plane(0)[i];
      if (wv <= 0.0) throw Error::numeric("latent texel lost coverage during guidance");
      for (int c = 0; c < accum.channels(); ++c) accum.plane(c)[i] /= wv;
    }
    canvas.latent = std::move(accum);

    for (const real v : canvas.latent.data())
      if (!std::isfinite(v)) throw Error::numeric("panorama latent became non-finite");
  }

  return backend.decode(canvas.latent);
}

Image equirect_face(const Image& equirect, const Vec3& forward, const Vec3& up, int size) {
  Image face(equirect.channels(), size, size);
  const Vec3 fwd = forward.normalized();
  const Vec3 r = up.normalized().cross(fwd).normalized();
  const Vec3 u = fwd.cross(r);
  const int W = equirect.width();
  const int H = equirect.height();
  for (int j = 0; j < size; ++j) {
    const real b = 1.0 - 2.0 * (j + 0.5) / size;
    for (int i = 0; i < size; ++i) {
      const real a = 2.0 * (i + 0.5) / size - 1.0;
      const Vec3 dir = (fwd + a * r + b * u).normalized();
      real px, py;
      lonlat_pixel(dir, W, H, &px, &py);
      const Tap4 t = wrap_tap(px, py, W, H);
      for (int c = 0; c < equirect.channels(); ++c) {
        const real* p = equirect.plane(c);
        face.at(c, j, i) = t.w00 * p[static_cast<std::size_t>(t.y0) * W + t.x0] +
                           t.w01 * p[static_cast<std::size_t>(t.y0) * W + t.x1] +
                           t.w10 * p[static_cast<std::size_t>(t.y1) * W + t.x0] +
                           t.w11 * p[static_cast<std::size_t>(t.y1) * W + t.x1];
      }
    }
  }
  return face;
}

void export_cubemap(const Image& equirect, int face_size, const std::string& prefix) {
  struct FaceDef {
    const char* suffix;
    Vec3 forward, up;
  };
  const FaceDef faces[6] = {
      {"px", Vec3::UnitX(), Vec3::UnitY()},  {"nx", -Vec3::UnitX(), Vec3::UnitY()},
      {"py", Vec3::UnitY(), -Vec3::UnitZ()}, {"ny", -Vec3::UnitY(), Vec3::UnitZ()},
      {"pz", Vec3::UnitZ(), Vec3::UnitY()},  {"nz", -Vec3::UnitZ(), Vec3::UnitY()},
  };
  for (const FaceDef& f : faces)
    write_png(fmt::format("{}_{}.png", prefix, f.suffix),
              equirect_face(equirect, f.forward, f.up, face_size));
}

}  // namespace citytex
