/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace citytex {

using real = double;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr real kPi = 3.14159265358979323846;

inline real deg_to_rad(real deg) { return deg * kPi / 180.0; }
inline real rad_to_deg(real rad) { return rad * 180.0 / kPi; }

// Error taxonomy shared across the library. The CLI maps Code::config to
// exit code 2 and everything else to 3.
class Error : public std::runtime_error {
public:
  enum class Code { config, validation, io, numeric, unavailable };

  Error(Code code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Code code() const { return code_; }

  static Error config(const std::string& m) { return {Code::config, m}; }
  static Error validation(const std::string& m) { return {Code::validation, m}; }
  static Error io(const std::string& m) { return {Code::io, m}; }
  static Error numeric(const std::string& m) { return {Code::numeric, m}; }
  static Error unavailable(const std::string& m) { return {Code::unavailable, m}; }

private:
  Code code_;
};

// Seeded random stream. Distribution helpers are hand-rolled so that the
// same seed produces the same sequence on every platform and standard
// library; std::uniform_real_distribution makes no such promise.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  real uniform01() {
    return static_cast<real>(engine_() >> 11) * 0x1.0p-53;
  }

  real uniform(real lo, real hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  real normal() {
    real u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const real u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Derives an independent stream, e.g. one per epoch.
  Rng fork(std::uint64_t salt) {
    const std::uint64_t mixed = (engine_() ^ (salt * 0x9E3779B97F4A7C15ull)) + salt;
    return Rng(mixed);
  }

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

private:
  std::mt19937_64 engine_;
};

// FNV-1a, used for input hashes in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace citytex
