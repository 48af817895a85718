/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/image.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>

namespace citytex {

// Joint image/text embedding contract. Both encoders map into the same
// d-dimensional space; cosine similarity between the two is the only
// operation the losses and metrics perform on the embeddings.
class EmbeddingModel {
public:
  using Vector = Eigen::Matrix<real, Eigen::Dynamic, 1>;

  virtual ~EmbeddingModel() = default;

  virtual int dim() const = 0;
  virtual Vector embed_image(const Image& rgb) const = 0;
  virtual Vector embed_text(const std::string& text) const = 0;

  // Accumulates d(loss)/d(image) given d(loss)/d(embedding).
  virtual void embed_image_vjp(const Image& rgb, const Vector& d_embedding,
                               Image& d_image_accum) const = 0;
};

// Deterministic stand-in for a pretrained joint encoder: images are
// area-pooled to a small grid and linearly projected with seeded weights;
// text tokens hash to seeded vectors that are averaged. Differentiable on
// the image side, so text-driven losses remain exercisable end to end
// without any external model.
class ProceduralEmbedding final : public EmbeddingModel {
public:
  explicit ProceduralEmbedding(int dim = 64, int pool = 8, std::uint64_t seed = 31);

  int dim() const override { return dim_; }
  Vector embed_image(const Image& rgb) const override;
  Vector embed_text(const std::string& text) const override;
  void embed_image_vjp(const Image& rgb, const Vector& d_embedding,
                       Image& d_image_accum) const override;

private:
  int dim_;
  int pool_;
  Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic> projection_;  // dim x (3*pool*pool)
  std::uint64_t token_seed_;
};

// Factory keyed by config name ("procedural"). Unknown names raise
// Error::unavailable with a hint about pluggable backends.
std::unique_ptr<EmbeddingModel> make_embedding_model(const std::string& name, int dim,
                                                     std::uint64_t seed);

}  // namespace citytex
