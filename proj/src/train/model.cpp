#include "hac/train/model.hpp"

#include <cmath>
#include <random>

#include "hac/errors.hpp"

namespace hac::train {

namespace {

Linear init_linear(std::size_t in, std::size_t out, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(in)));
  Linear layer{ad::Tensor::zeros({in, out}), ad::Tensor::zeros({out})};
  for (double& w : layer.weight.values()) w = normal(rng);
  return layer;
}

Encoder init_encoder(const ModelConfig& c, std::mt19937_64& rng) {
  Encoder enc;
  if (c.hidden_dim == 0) {
    enc.layers.push_back(init_linear(c.input_dim, c.embed_dim, c.init_scale, rng));
  } else {
    enc.layers.push_back(init_linear(c.input_dim, c.hidden_dim, std::sqrt(2.0), rng));
    enc.layers.push_back(init_linear(c.hidden_dim, c.embed_dim, c.init_scale, rng));
  }
  return enc;
}

template <class Self, class Out>
void collect(Self& model, Out& out) {
  for (auto* enc : {&model.image, &model.text}) {
    const std::string prefix = enc == &model.image ? "image." : "text.";
    for (std::size_t k = 0; k < enc->layers.size(); ++k) {
      out.emplace_back(prefix + std::to_string(k) + ".weight", &enc->layers[k].weight);
      out.emplace_back(prefix + std::to_string(k) + ".bias", &enc->layers[k].bias);
    }
  }
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config) {
  if (config.input_dim < 1) throw ValidationError("model input dimension must be positive");
  if (config.embed_dim < 2) throw ValidationError("embedding dimension must be at least 2");
  if (!(config.init_scale > 0.0)) throw ValidationError("init_scale must be positive");
  config.geometry.validate();
  std::mt19937_64 rng(config.seed);
  ModelParams m;
  m.image = init_encoder(config, rng);
  m.text = init_encoder(config, rng);
  m.kind = config.kind;
  m.geometry = config.geometry;
  return m;
}

std::vector<std::pair<std::string, ad::Tensor*>> ModelParams::named_parameters() {
  std::vector<std::pair<std::string, ad::Tensor*>> out;
  collect(*this, out);
  return out;
}

std::vector<std::pair<std::string, const ad::Tensor*>> ModelParams::named_parameters() const {
  std::vector<std::pair<std::string, const ad::Tensor*>> out;
  collect(*this, out);
  return out;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.kind != b.kind || a.geometry.curvature != b.geometry.curvature ||
      a.geometry.aperture_k != b.geometry.aperture_k || a.geometry.acosh_eps != b.geometry.acosh_eps) {
    return false;
  }
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || *pa[i].second != *pb[i].second) return false;
  }
  return true;
}

BoundModel::BoundModel(ad::Graph& graph, const ModelParams& model, bool trainable)
    : graph_(graph), model_(model) {
  for (const auto& [name, tensor] : model.named_parameters()) {
    params_.push_back(trainable ? graph.variable(*tensor) : graph.constant(*tensor));
  }
}

ad::Var BoundModel::tower(std::size_t first, std::size_t layers, const ad::Tensor& features) const {
  if (features.rank() != 2 || features.cols() != model_.input_dim()) {
    throw ShapeError("features of shape " + ad::shape_string(features.shape()) + " for an encoder expecting " +
                     std::to_string(model_.input_dim()) + " columns");
  }
  ad::Var h = graph_.constant(features);
  for (std::size_t k = 0; k < layers; ++k) {
    h = ad::matmul(h, params_[first + 2 * k]) + params_[first + 2 * k + 1];
    if (k + 1 < layers) h = ad::relu(h);
  }
  return h;
}

ad::Var BoundModel::finish(const ad::Var& raw) const {
  if (model_.kind == objectives::SimilarityKind::kEuclideanCosine) {
    for (std::size_t i = 0; i < raw.shape()[0]; ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < raw.shape()[1]; ++j) sq += raw.value().at(i, j) * raw.value().at(i, j);
      if (sq == 0.0) throw DomainError("encoder produced a zero vector that cannot be normalised");
    }
    return raw / ad::norm(raw, 1, true);
  }
  return geometry::exp_map_origin(raw, model_.geometry.curvature);
}

ad::Var BoundModel::embed_image(const ad::Tensor& features) const {
  return finish(tower(0, model_.image.layers.size(), features));
}

ad::Var BoundModel::embed_text(const ad::Tensor& features) const {
  return finish(tower(2 * model_.image.layers.size(), model_.text.layers.size(), features));
}

objectives::EmbeddingBatch encode(const BoundModel& bound, const ModelParams& model, const ad::Tensor& image_features,
                                  const ad::Tensor& text_features, std::vector<bool> forget_mask) {
  objectives::EmbeddingBatch batch{bound.embed_image(image_features), bound.embed_text(text_features),
                                   std::move(forget_mask), model.kind, model.geometry};
  batch.validate();
  return batch;
}

ad::Tensor embed_images(const ModelParams& model, const ad::Tensor& features) {
  ad::Graph graph;
  BoundModel bound(graph, model, false);
  return bound.embed_image(features).value();
}

ad::Tensor embed_texts(const ModelParams& model, const ad::Tensor& features) {
  ad::Graph graph;
  BoundModel bound(graph, model, false);
  return bound.embed_text(features).value();
}

}  // namespace hac::train
