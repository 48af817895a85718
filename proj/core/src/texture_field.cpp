/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/texture_field.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace citytex {

namespace {

using Matrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::Matrix<real, Eigen::Dynamic, 1>>;
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<real, Eigen::Dynamic, 1>>;

constexpr std::size_t kChunk = 4096;
constexpr std::uint32_t kHashPrimeY = 2654435761u;

inline real clamp01_counting(real v, std::uint64_t* warnings) {
  if (v < 0.0) {
    ++*warnings;
    return 0.0;
  }
  if (v > 1.0) {
    ++*warnings;
    return 1.0;
  }
  return v;
}

inline real sigmoid(real x) { return 1.0 / (1.0 + std::exp(-x)); }

void write_raw(std::ostream& os, const void* data, std::size_t bytes) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::istream& is, void* data, std::size_t bytes) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (!is) throw Error::io("truncated field checkpoint");
}

}  // namespace

// Decoder parameter layout inside decoder_: W1 | b1 | W2 | b2 | W3 | b3.
struct NeuralTextureField::DecoderSlices {
  std::size_t w1, b1, w2, b2, w3, b3, total;
  int in, hidden;

  DecoderSlices(int input_dim, int hidden_width) : in(input_dim), hidden(hidden_width) {
    w1 = 0;
    b1 = w1 + static_cast<std::size_t>(hidden) * in;
    w2 = b1 + hidden;
    b2 = w2 + static_cast<std::size_t>(hidden) * hidden;
    w3 = b2 + hidden;
    b3 = w3 + static_cast<std::size_t>(3) * hidden;
    total = b3 + 3;
  }
};

void DistillationConfig::validate() const {
  if (batch_size < 1 || steps < 1 || target_psnr <= 0.0 || eval_interval < 1)
    throw Error::config("distillation config fields must be positive");
}

NeuralTextureField::NeuralTextureField(const FieldConfig& config) : config_(config) {
  if (config_.levels < 1 || config_.base_resolution < 1 || config_.growth < 1.0 ||
      config_.features_per_level < 1 || config_.table_log2 < 4 || config_.hidden_width < 1 ||
      config_.hidden_layers != 2)
    throw Error::config("invalid neural texture field configuration");

  const std::size_t table_size = std::size_t(1) << config_.table_log2;
  std::size_t offset = 0;
  for (int l = 0; l < config_.levels; ++l) {
    LevelSpec spec;
    spec.resolution =
        static_cast<int>(std::floor(config_.base_resolution * std::pow(config_.growth, l)));
    const std::size_t dense =
        static_cast<std::size_t>(spec.resolution + 1) * (spec.resolution + 1);
    spec.hashed = dense > table_size;
    spec.entries = spec.hashed ? table_size : dense;
    spec.offset = offset;
    offset += spec.entries * config_.features_per_level;
    level_specs_.push_back(spec);
  }
  grid_entries_ = offset;

  const DecoderSlices s(config_.levels * config_.features_per_level, config_.hidden_width);
  grid_.assign(grid_entries_, 0.0);
  decoder_.assign(s.total, 0.0);
  grid_grad_.assign(grid_entries_, 0.0);
  decoder_grad_.assign(s.total, 0.0);
  touched_stamp_.assign(grid_entries_, 0);

  init_params();

  if (parameter_bytes() > config_.max_param_bytes)
    throw Error::config(fmt::format("field parameters ({} bytes) exceed the configured budget ({})",
                                    parameter_bytes(), config_.max_param_bytes));
}

void NeuralTextureField::init_params() {
  Rng rng(config_.init_seed);
  // Small uniform grid init, as is customary for hash grids.
  for (real& g : grid_) g = rng.uniform(-1e-4, 1e-4);

  const int in = config_.levels * config_.features_per_level;
  const DecoderSlices s(in, config_.hidden_width);
  const real std1 = std::sqrt(2.0 / in);
  const real std2 = std::sqrt(2.0 / config_.hidden_width);
  for (std::size_t i = s.w1; i < s.b1; ++i) decoder_[i] = rng.normal() * std1;
  for (std::size_t i = s.w2; i < s.b2; ++i) decoder_[i] = rng.normal() * std2;
  // Output layer starts at zero: a fresh field decodes to sigmoid(0) = 0.5
  // everywhere while gradients still flow through the hidden activations.
  for (std::size_t i = s.w3; i < s.total; ++i) decoder_[i] = 0.0;
}

std::size_t NeuralTextureField::vertex_index(const LevelSpec& level, int xi, int yi) const {
  if (!level.hashed)
    return static_cast<std::size_t>(yi) * (level.resolution + 1) + xi;
  const std::uint32_t h =
      static_cast<std::uint32_t>(xi) ^ (static_cast<std::uint32_t>(yi) * kHashPrimeY);
  return h & (static_cast<std::uint32_t>(level.entries) - 1);
}

void NeuralTextureField::gather_features(const real* uvs, std::size_t count,
                                         real* features) const {
  const int F = config_.features_per_level;
  const int dim = config_.levels * F;
  for (std::size_t i = 0; i < count; ++i) {
    const real u = clamp01_counting(uvs[2 * i], &clamp_warnings_);
    const real v = clamp01_counting(uvs[2 * i + 1], &clamp_warnings_);
    real* out = features + i * dim;
    for (std::size_t l = 0; l < level_specs_.size(); ++l) {
      const LevelSpec& spec = level_specs_[l];
      real x = u * spec.resolution;
      real y = v * spec.resolution;
      int xi = static_cast<int>(x);
      int yi = static_cast<int>(y);
      if (xi >= spec.resolution) xi = spec.resolution - 1;
      if (yi >= spec.resolution) yi = spec.resolution - 1;
      const real wx = x - xi;
      const real wy = y - yi;
      const std::size_t i00 = spec.offset + vertex_index(spec, xi, yi) * F;
      const std::size_t i01 = spec.offset + vertex_index(spec, xi + 1, yi) * F;
      const std::size_t i10 = spec.offset + vertex_index(spec, xi, yi + 1) * F;
      const std::size_t i11 = spec.offset + vertex_index(spec, xi + 1, yi + 1) * F;
      const real w00 = (1.0 - wx) * (1.0 - wy);
      const real w01 = wx * (1.0 - wy);
      const real w10 = (1.0 - wx) * wy;
      const real w11 = wx * wy;
      for (int f = 0; f < F; ++f) {
        out[l * F + f] = w00 * grid_[i00 + f] + w01 * grid_[i01 + f] +
                         w10 * grid_[i10 + f] + w11 * grid_[i11 + f];
      }
    }
  }
}

void NeuralTextureField::scatter_feature_grads(const real* uvs, std::size_t count,
                                               const real* d_features) {
  const int F = config_.features_per_level;
  const int dim = config_.levels * F;
  auto touch = [this](std::size_t base) {
    if (touched_stamp_[base] != stamp_) {
      touched_stamp_[base] = stamp_;
      touched_.push_back(static_cast<std::uint32_t>(base));
    }
  };
  for (std::size_t i = 0; i < count; ++i) {
    const real u = std::clamp<real>(uvs[2 * i], 0.0, 1.0);
    const real v = std::clamp<real>(uvs[2 * i + 1], 0.0, 1.0);
    const real* din = d_features + i * dim;
    for (std::size_t l = 0; l < level_specs_.size(); ++l) {
      const LevelSpec& spec = level_specs_[l];
      real x = u * spec.resolution;
      real y = v * spec.resolution;
      int xi = static_cast<int>(x);
      int yi = static_cast<int>(y);
      if (xi >= spec.resolution) xi = spec.resolution - 1;
      if (yi >= spec.resolution) yi = spec.resolution - 1;
      const real wx = x - xi;
      const real wy = y - yi;
      const std::size_t idx[4] = {spec.offset + vertex_index(spec, xi, yi) * F,
                                  spec.offset + vertex_index(spec, xi + 1, yi) * F,
                                  spec.offset + vertex_index(spec, xi, yi + 1) * F,
                                  spec.offset + vertex_index(spec, xi + 1, yi + 1) * F};
      const real w[4] = {(1.0 - wx) * (1.0 - wy), wx * (1.0 - wy), (1.0 - wx) * wy, wx * wy};
      for (int corner = 0; corner < 4; ++corner) {
        for (int f = 0; f < F; ++f) {
          grid_grad_[idx[corner] + f] += w[corner] * din[l * F + f];
          touch(idx[corner] + f);
        }
      }
    }
  }
}

void NeuralTextureField::query(const real* uvs, std::size_t count, real* out_rgb) const {
  const int in = config_.levels * config_.features_per_level;
  const int hid = config_.hidden_width;
  const DecoderSlices s(in, hid);
  const real* w1 = decoder_.data() + s.w1;  // column-major (hid x in)
  const real* b1 = decoder_.data() + s.b1;
  const real* w2 = decoder_.data() + s.w2;
  const real* b2 = decoder_.data() + s.b2;
  const real* w3 = decoder_.data() + s.w3;
  const real* b3 = decoder_.data() + s.b3;

  // Hand-rolled forward with a fixed per-sample accumulation order, so a
  // query returns the same bits regardless of how callers batch it (baking
  // must replicate single queries exactly).
  std::vector<real> features(kChunk * in);
  std::vector<real> a1(hid), a2(hid);
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t n = std::min(kChunk, count - start);
    gather_features(uvs + 2 * start, n, features.data());
    for (std::size_t j = 0; j < n; ++j) {
      const real* x = features.data() + j * in;
      // Column-of-weights accumulation: per output the sum runs over k in
      // ascending order (batch-invariant), while the inner loop stays
      // contiguous and vectorizable.
      for (int r = 0; r < hid; ++r) a1[r] = b1[r];
      for (int k = 0; k < in; ++k) {
        const real xk = x[k];
        const real* col = w1 + static_cast<std::size_t>(k) * hid;
        for (int r = 0; r < hid; ++r) a1[r] += col[r] * xk;
      }
      for (int r = 0; r < hid; ++r) {
        if (a1[r] < 0.0) a1[r] = 0.0;
        a2[r] = b2[r];
      }
      for (int k = 0; k < hid; ++k) {
        const real xk = a1[k];
        if (xk == 0.0) continue;
        const real* col = w2 + static_cast<std::size_t>(k) * hid;
        for (int r = 0; r < hid; ++r) a2[r] += col[r] * xk;
      }
      real z3[3] = {b3[0], b3[1], b3[2]};
      for (int k = 0; k < hid; ++k) {
        const real xk = a2[k] > 0.0 ? a2[k] : 0.0;
        const real* col = w3 + static_cast<std::size_t>(k) * 3;
        z3[0] += col[0] * xk;
        z3[1] += col[1] * xk;
        z3[2] += col[2] * xk;
      }
      for (int c = 0; c < 3; ++c) out_rgb[(start + j) * 3 + c] = sigmoid(z3[c]);
    }
  }
}

std::vector<real> NeuralTextureField::query(const std::vector<real>& uvs) const {
  std::vector<real> out(uvs.size() / 2 * 3);
  query(uvs.data(), uvs.size() / 2, out.data());
  return out;
}

void NeuralTextureField::zero_grad() {
  for (const std::uint32_t idx : touched_) grid_grad_[idx] = 0.0;
  touched_.clear();
  ++stamp_;
  if (stamp_ == 0) {  // stamp wrapped; reset all marks
    std::fill(touched_stamp_.begin(), touched_stamp_.end(), 0);
    stamp_ = 1;
  }
  std::fill(decoder_grad_.begin(), decoder_grad_.end(), 0.0);
}

void NeuralTextureField::backward(const real* uvs, std::size_t count, const real* d_rgb) {
  const int in = config_.levels * config_.features_per_level;
  const int hid = config_.hidden_width;
  const DecoderSlices s(in, hid);
  ConstMatrixMap w1(decoder_.data() + s.w1, hid, in);
  ConstVectorMap b1(decoder_.data() + s.b1, hid);
  ConstMatrixMap w2(decoder_.data() + s.w2, hid, hid);
  ConstVectorMap b2(decoder_.data() + s.b2, hid);
  ConstMatrixMap w3(decoder_.data() + s.w3, 3, hid);
  ConstVectorMap b3(decoder_.data() + s.b3, 3);

  MatrixMap dw1(decoder_grad_.data() + s.w1, hid, in);
  VectorMap db1(decoder_grad_.data() + s.b1, hid);
  MatrixMap dw2(decoder_grad_.data() + s.w2, hid, hid);
  VectorMap db2(decoder_grad_.data() + s.b2, hid);
  MatrixMap dw3(decoder_grad_.data() + s.w3, 3, hid);
  VectorMap db3(decoder_grad_.data() + s.b3, 3);

  std::vector<real> features(kChunk * in);
  std::vector<real> dfeat(kChunk * in);
  for (std::size_t start = 0; start < count; start += kChunk) {
    const std::size_t n = std::min(kChunk, count - start);
    gather_features(uvs + 2 * start, n, features.data());
    ConstMatrixMap x(features.data(), in, n);
    Matrix z1 = (w1 * x).colwise() + b1;
    Matrix a1 = z1.cwiseMax(0.0);
    Matrix z2 = (w2 * a1).colwise() + b2;
    Matrix a2 = z2.cwiseMax(0.0);
    Matrix z3 = (w3 * a2).colwise() + b3;

    Matrix dz3(3, n);
    for (std::size_t j = 0; j < n; ++j) {
      for (int c = 0; c < 3; ++c) {
        const real out = sigmoid(z3(c, j));
        dz3(c, j) = d_rgb[(start + j) * 3 + c] * out * (1.0 - out);
      }
    }

    dw3 += dz3 * a2.transpose();
    db3 += dz3.rowwise().sum();
    Matrix dz2 = (w3.transpose() * dz3).cwiseProduct((z2.array() > 0.0).cast<real>().matrix());
    dw2 += dz2 * a1.transpose();
    db2 += dz2.rowwise().sum();
    Matrix dz1 = (w2.transpose() * dz2).cwiseProduct((z1.array() > 0.0).cast<real>().matrix());
    dw1 += dz1 * x.transpose();
    db1 += dz1.rowwise().sum();
    Matrix dx = w1.transpose() * dz1;
    for (std::size_t j = 0; j < n; ++j)
      std::memcpy(dfeat.data() + j * in, dx.col(j).data(), sizeof(real) * in);
    scatter_feature_grads(uvs + 2 * start, n, dfeat.data());
  }
}

std::size_t NeuralTextureField::parameter_count() const {
  return grid_.size() + decoder_.size();
}

void NeuralTextureField::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error::io("cannot open field checkpoint for writing: " + path);
  const char magic[8] = {'C', 'T', 'X', 'F', 'L', 'D', '0', '1'};
  write_raw(os, magic, sizeof(magic));
  const std::int64_t ints[7] = {config_.levels,          config_.base_resolution,
                                config_.features_per_level, config_.table_log2,
                                config_.hidden_width,    config_.hidden_layers,
                                static_cast<std::int64_t>(config_.init_seed)};
  write_raw(os, ints, sizeof(ints));
  write_raw(os, &config_.growth, sizeof(real));
  const std::uint64_t sizes[2] = {grid_.size(), decoder_.size()};
  write_raw(os, sizes, sizeof(sizes));
  write_raw(os, grid_.data(), grid_.size() * sizeof(real));
  write_raw(os, decoder_.data(), decoder_.size() * sizeof(real));
  if (!os) throw Error::io("failed writing field checkpoint: " + path);
}

NeuralTextureField NeuralTextureField::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error::io("cannot open field checkpoint: " + path);
  char magic[8];
  read_raw(is, magic, sizeof(magic));
  if (std::memcmp(magic, "CTXFLD01", 8) != 0)
    throw Error::io("not a field checkpoint: " + path);
  std::int64_t ints[7];
  read_raw(is, ints, sizeof(ints));
  FieldConfig cfg;
  cfg.levels = static_cast<int>(ints[0]);
  cfg.base_resolution = static_cast<int>(ints[1]);
  cfg.features_per_level = static_cast<int>(ints[2]);
  cfg.table_log2 = static_cast<int>(ints[3]);
  cfg.hidden_width = static_cast<int>(ints[4]);
  cfg.hidden_layers = static_cast<int>(ints[5]);
  cfg.init_seed = static_cast<std::uint64_t>(ints[6]);
  read_raw(is, &cfg.growth, sizeof(real));
  std::uint64_t sizes[2];
  read_raw(is, sizes, sizeof(sizes));
  NeuralTextureField field(cfg);
  if (sizes[0] != field.grid_.size() || sizes[1] != field.decoder_.size())
    throw Error::io("field checkpoint does not match its configuration header");
  read_raw(is, field.grid_.data(), field.grid_.size() * sizeof(real));
  read_raw(is, field.decoder_.data(), field.decoder_.size() * sizeof(real));
  return field;
}

FieldOptimizer::FieldOptimizer(NeuralTextureField& field, real lr_grid_in, real lr_decoder_in)
    : lr_grid(lr_grid_in), lr_decoder(lr_decoder_in), field_(field) {
  grid_m_.assign(field.grid_params().size(), 0.0);
  grid_v_.assign(field.grid_params().size(), 0.0);
  decoder_m_.assign(field.decoder_params().size(), 0.0);
  decoder_v_.assign(field.decoder_params().size(), 0.0);
}

void FieldOptimizer::step() {
  ++t_;
  const real bc1 = 1.0 - std::pow(beta1, static_cast<real>(t_));
  const real bc2 = 1.0 - std::pow(beta2, static_cast<real>(t_));

  std::vector<real>& grid = field_.grid_params();
  std::vector<real>& grid_grad = field_.grid_grad();
  for (const std::uint32_t i : field_.touched_grid_entries()) {
    const real g = grid_grad[i];
    grid_m_[i] = beta1 * grid_m_[i] + (1.0 - beta1) * g;
    grid_v_[i] = beta2 * grid_v_[i] + (1.0 - beta2) * g * g;
    grid[i] -= lr_grid * (grid_m_[i] / bc1) / (std::sqrt(grid_v_[i] / bc2) + epsilon);
  }

  std::vector<real>& dec = field_.decoder_params();
  std::vector<real>& dec_grad = field_.decoder_grad();
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const real g = dec_grad[i];
    decoder_m_[i] = beta1 * decoder_m_[i] + (1.0 - beta1) * g;
    decoder_v_[i] = beta2 * decoder_v_[i] + (1.0 - beta2) * g * g;
    dec[i] -= lr_decoder * (decoder_m_[i] / bc1) / (std::sqrt(decoder_v_[i] / bc2) + epsilon);
  }
}

void FieldOptimizer::serialize(std::ostream& os) const {
  write_raw(os, &t_, sizeof(t_));
  const std::uint64_t sizes[2] = {grid_m_.size(), decoder_m_.size()};
  write_raw(os, sizes, sizeof(sizes));
  write_raw(os, grid_m_.data(), grid_m_.size() * sizeof(real));
  write_raw(os, grid_v_.data(), grid_v_.size() * sizeof(real));
  write_raw(os, decoder_m_.data(), decoder_m_.size() * sizeof(real));
  write_raw(os, decoder_v_.data(), decoder_v_.size() * sizeof(real));
}

void FieldOptimizer::deserialize(std::istream& is) {
  read_raw(is, &t_, sizeof(t_));
  std::uint64_t sizes[2];
  read_raw(is, sizes, sizeof(sizes));
  if (sizes[0] != grid_m_.size() || sizes[1] != decoder_m_.size())
    throw Error::io("optimizer state does not match the field it was created for");
  read_raw(is, grid_m_.data(), grid_m_.size() * sizeof(real));
  read_raw(is, grid_v_.data(), grid_v_.size() * sizeof(real));
  read_raw(is, decoder_m_.data(), decoder_m_.size() * sizeof(real));
  read_raw(is, decoder_v_.data(), decoder_v_.size() * sizeof(real));
}

namespace {

// Held-out PSNR on the texel-center grid (optionally strided for speed).
real eval_grid_psnr(const NeuralTextureField& field, const Image& texture, int stride) {
  const int w = texture.width();
  const int h = texture.height();
  std::vector<real> uvs;
  std::vector<real> targets;
  for (int y = 0; y < h; y += stride) {
    for (int x = 0; x < w; x += stride) {
      uvs.push_back((x + 0.5) / w);
      uvs.push_back((y + 0.5) / h);
      for (int c = 0; c < 3; ++c) targets.push_back(texture.at(c, y, x));
    }
  }
  std::vector<real> out(targets.size());
  field.query(uvs.data(), uvs.size() / 2, out.data());
  real acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const real d = out[i] - targets[i];
    acc += d * d;
  }
  const real m = acc / static_cast<real>(out.size());
  if (m <= 0.0) return std::numeric_limits<real>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace

DistillationReport distill(NeuralTextureField& field, const Image& texture,
                           const DistillationConfig& config) {
  config.validate();
  if (texture.channels() != 3 || texture.width() < 1 || texture.height() < 1)
    throw Error::validation("distillation target must be a non-empty RGB texture");

  Rng rng(config.seed);
  FieldOptimizer opt(field);
  DistillationReport report;

  const int w = texture.width();
  const int h = texture.height();
  const int B = config.batch_size;
  std::vector<real> uvs(2 * B);
  std::vector<real> targets(3 * B);
  std::vector<real> out(3 * B);
  std::vector<real> d_rgb(3 * B);

  real best_psnr = -std::numeric_limits<real>::infinity();
  constexpr real kDivergenceDrop = 3.0;  // dB below the best seen -> abort

  int step = 0;
  for (; step < config.steps; ++step) {
    for (int i = 0; i < B; ++i) {
      const int tx = static_cast<int>(rng.uniform_index(w));
      const int ty = static_cast<int>(rng.uniform_index(h));
      const real u = (tx + rng.uniform01()) / w;
      const real v = (ty + rng.uniform01()) / h;
      uvs[2 * i] = u;
      uvs[2 * i + 1] = v;
      sample_bilinear_rgb(texture, u, v, targets.data() + 3 * i);
    }
    field.query(uvs.data(), B, out.data());
    const real scale = 2.0 / (3.0 * B);
    real loss = 0.0;
    for (int i = 0; i < 3 * B; ++i) {
      const real d = out[i] - targets[i];
      loss += d * d;
      d_rgb[i] = scale * d;
    }
    if (!std::isfinite(loss))
      throw Error::numeric(fmt::format("distillation loss became non-finite at step {}", step));

    field.zero_grad();
    field.backward(uvs.data(), B, d_rgb.data());
    opt.step();

    if ((step + 1) % config.eval_interval == 0 || step + 1 == config.steps) {
      const int stride = std::max(1, std::max(w, h) / 256);
      const real p = eval_grid_psnr(field, texture, stride);
      report.psnr_curve.emplace_back(step + 1, p);
      if (p > best_psnr) best_psnr = p;
      if (best_psnr - p > kDivergenceDrop)
        throw Error::numeric(
            fmt::format("distillation diverged: psnr {:.2f} dB after best {:.2f} dB at step {}", p,
                        best_psnr, step + 1));
      if (p >= config.target_psnr) {
        ++step;
        break;
      }
    }
  }

  report.steps_run = step;
  report.achieved_psnr = eval_grid_psnr(field, texture, 1);
  return report;
}

Image bake(const NeuralTextureField& field, int width, int height, int max_resolution) {
  if (width < 1 || height < 1) throw Error::validation("bake resolution must be positive");
  if (width > max_resolution || height > max_resolution)
    throw Error::validation(fmt::format("bake resolution {}x{} exceeds the cap {}", width, height,
                                        max_resolution));
  Image out(3, height, width);
  const std::size_t chunk = 16384;
  std::vector<real> uvs(2 * chunk);
  std::vector<real> rgb(3 * chunk);
  std::size_t filled = 0;
  std::vector<std::pair<int, int>> coords(chunk);
  auto flush = [&]() {
    field.query(uvs.data(), filled, rgb.data());
    for (std::size_t i = 0; i < filled; ++i)
      for (int c = 0; c < 3; ++c) out.at(c, coords[i].second, coords[i].first) = rgb[3 * i + c];
    filled = 0;
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      uvs[2 * filled] = (x + 0.5) / width;
      uvs[2 * filled + 1] = (y + 0.5) / height;
      coords[filled] = {x, y};
      if (++filled == chunk) flush();
    }
  }
  if (filled > 0) flush();
  return out;
}

}  // namespace citytex
