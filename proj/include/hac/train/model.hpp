#pragma once

// Dual encoder over precomputed features. Each tower is an affine map,
// optionally with one ReLU hidden layer. Euclidean models normalise the
// output; hyperbolic models treat it as a tangent vector at the origin and
// lift it onto the hyperboloid.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hac/ad/graph.hpp"
#include "hac/geometry/lorentz.hpp"
#include "hac/objectives/losses.hpp"

namespace hac::train {

struct Linear {
  ad::Tensor weight;  // in x out
  ad::Tensor bias;    // out
};

struct Encoder {
  std::vector<Linear> layers;

  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t output_dim() const { return layers.back().weight.cols(); }
};

struct ModelConfig {
  std::size_t input_dim = 16;
  std::size_t embed_dim = 8;
  /// 0 for a purely affine tower.
  std::size_t hidden_dim = 0;
  /// Roughly the gain from input norm to output norm at initialisation.
  double init_scale = 1.0;
  objectives::SimilarityKind kind = objectives::SimilarityKind::kEuclideanCosine;
  geometry::GeometryConfig geometry;
  std::uint64_t seed = 0;
};

struct ModelParams {
  Encoder image;
  Encoder text;
  objectives::SimilarityKind kind = objectives::SimilarityKind::kEuclideanCosine;
  geometry::GeometryConfig geometry;

  static ModelParams init(const ModelConfig& config);

  /// Stable order: image layers then text layers, weight before bias.
  std::vector<std::pair<std::string, ad::Tensor*>> named_parameters();
  std::vector<std::pair<std::string, const ad::Tensor*>> named_parameters() const;

  std::size_t input_dim() const { return image.input_dim(); }
  std::size_t embed_dim() const { return image.output_dim(); }

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// Parameters of one model placed on a graph.
class BoundModel {
 public:
  BoundModel(ad::Graph& graph, const ModelParams& model, bool trainable);

  /// Embeddings of each feature row: unit vectors or hyperboloid space
  /// components.
  ad::Var embed_image(const ad::Tensor& features) const;
  ad::Var embed_text(const ad::Tensor& features) const;

  const std::vector<ad::Var>& parameters() const { return params_; }

 private:
  ad::Var tower(std::size_t first, std::size_t layers, const ad::Tensor& features) const;
  ad::Var finish(const ad::Var& raw) const;

  ad::Graph& graph_;
  const ModelParams& model_;
  std::vector<ad::Var> params_;
};

/// Encodes a raw feature batch into an embedding batch on `graph`.
objectives::EmbeddingBatch encode(const BoundModel& bound, const ModelParams& model, const ad::Tensor& image_features,
                                  const ad::Tensor& text_features, std::vector<bool> forget_mask);

/// Forward-only embedding of feature rows.
ad::Tensor embed_images(const ModelParams& model, const ad::Tensor& features);
ad::Tensor embed_texts(const ModelParams& model, const ad::Tensor& features);

}  // namespace hac::train
