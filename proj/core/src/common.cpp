/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/common.hpp"

#include <fstream>
#include <sstream>

namespace citytex {

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& state) {
  Rng r;
  std::istringstream is(state);
  is >> r.engine_;
  if (!is) throw Error::io("invalid rng state string");
  return r;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::io("cannot open file for hashing: " + path);
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

}  // namespace citytex
