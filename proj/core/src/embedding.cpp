/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace citytex {

ProceduralEmbedding::ProceduralEmbedding(int dim, int pool, std::uint64_t seed)
    : dim_(dim), pool_(pool), token_seed_(seed * 0x9E3779B97F4A7C15ull + 7) {
  if (dim < 2 || pool < 1) throw Error::config("embedding dim/pool too small");
  Rng rng(seed);
  const int in = 3 * pool * pool;
  projection_.resize(dim, in);
  const real stddev = 1.0 / std::sqrt(static_cast<real>(in));
  for (int j = 0; j < in; ++j)
    for (int i = 0; i < dim; ++i) projection_(i, j) = rng.normal() * stddev;
}

EmbeddingModel::Vector ProceduralEmbedding::embed_image(const Image& rgb) const {
  const Image pooled = resize_area(rgb, pool_, pool_);
  Eigen::Map<const Vector> x(pooled.data().data(), 3 * pool_ * pool_);
  return projection_ * x;
}

void ProceduralEmbedding::embed_image_vjp(const Image& rgb, const Vector& d_embedding,
                                          Image& d_image_accum) const {
  const Vector d_pooled_vec = projection_.transpose() * d_embedding;
  Image d_pooled(3, pool_, pool_);
  std::copy(d_pooled_vec.data(), d_pooled_vec.data() + d_pooled_vec.size(),
            d_pooled.data().begin());
  resize_area_adjoint(d_pooled, rgb.height(), rgb.width(), d_image_accum);
}

EmbeddingModel::Vector ProceduralEmbedding::embed_text(const std::string& text) const {
  Vector acc = Vector::Zero(dim_);
  std::istringstream stream(text);
  std::string token;
  int count = 0;
  while (stream >> token) {
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    token.erase(std::remove_if(token.begin(), token.end(),
                               [](unsigned char c) { return std::ispunct(c); }),
                token.end());
    if (token.empty()) continue;
    Rng rng(fnv1a64(token.data(), token.size()) ^ token_seed_);
    for (int i = 0; i < dim_; ++i) acc[i] += rng.normal();
    ++count;
  }
  if (count == 0) throw Error::validation("text prompt is empty");
  return acc / static_cast<real>(count);
}

std::unique_ptr<EmbeddingModel> make_embedding_model(const std::string& name, int dim,
                                                     std::uint64_t seed) {
  if (name == "procedural") return std::make_unique<ProceduralEmbedding>(dim, 8, seed);
  throw Error::unavailable(
      "unknown embedding backend '" + name +
      "'; available: procedural (implement EmbeddingModel to plug in a pretrained encoder)");
}

}  // namespace citytex
