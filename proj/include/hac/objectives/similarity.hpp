#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hac/ad/graph.hpp"
#include "hac/geometry/lorentz.hpp"

namespace hac::objectives {

enum class SimilarityKind {
  kEuclideanCosine,
  /// Negative geodesic distance on the hyperboloid.
  kHyperbolicNegDistance,
};

std::string_view to_string(SimilarityKind kind);
SimilarityKind similarity_kind_from_string(std::string_view name);

/// A single embedding: a Euclidean vector or a point on the hyperboloid.
using Embedding = std::variant<std::vector<double>, geometry::LorentzPoint>;

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double similarity(const Embedding& a, const Embedding& b, SimilarityKind kind);

/// Similarity of row i of `a` and row j of `b`. Hyperbolic rows hold space
/// components only.
double row_similarity(const ad::Tensor& a, std::size_t i, const ad::Tensor& b, std::size_t j,
                      SimilarityKind kind, double curvature);

/// Differentiable N x M similarity matrix between the rows of two matrices.
ad::Var similarity_matrix(const ad::Var& a, const ad::Var& b, SimilarityKind kind, double curvature);

}  // namespace hac::objectives
