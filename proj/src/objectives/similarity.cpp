#include "hac/objectives/similarity.hpp"

#include <cmath>

#include "hac/errors.hpp"

namespace hac::objectives {

std::string_view to_string(SimilarityKind kind) {
  return kind == SimilarityKind::kEuclideanCosine ? "euclidean-cosine" : "hyperbolic-negative-distance";
}

SimilarityKind similarity_kind_from_string(std::string_view name) {
  if (name == "euclidean-cosine") return SimilarityKind::kEuclideanCosine;
  if (name == "hyperbolic-negative-distance") return SimilarityKind::kHyperbolicNegDistance;
  throw ValidationError("unknown similarity kind '" + std::string(name) + "'");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine similarity of vectors with different lengths");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DomainError("cosine similarity of a zero-norm vector");
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

double similarity(const Embedding& a, const Embedding& b, SimilarityKind kind) {
  if (kind == SimilarityKind::kEuclideanCosine) {
    const auto* va = std::get_if<std::vector<double>>(&a);
    const auto* vb = std::get_if<std::vector<double>>(&b);
    if (!va || !vb) throw ValidationError("cosine similarity needs Euclidean vectors");
    return cosine_similarity(*va, *vb);
  }
  const auto* pa = std::get_if<geometry::LorentzPoint>(&a);
  const auto* pb = std::get_if<geometry::LorentzPoint>(&b);
  if (!pa || !pb) throw ValidationError("hyperbolic similarity needs Lorentz points");
  return -geometry::lorentz_distance(*pa, *pb);
}

double row_similarity(const ad::Tensor& a, std::size_t i, const ad::Tensor& b, std::size_t j,
                      SimilarityKind kind, double curvature) {
  const std::size_t d = a.cols();
  if (b.cols() != d) throw ShapeError("row_similarity: column mismatch");
  std::span<const double> ra = a.values().subspan(i * d, d);
  std::span<const double> rb = b.values().subspan(j * d, d);
  if (kind == SimilarityKind::kEuclideanCosine) return cosine_similarity(ra, rb);
  const auto pa = geometry::LorentzPoint::from_space({ra.begin(), ra.end()}, curvature);
  const auto pb = geometry::LorentzPoint::from_space({rb.begin(), rb.end()}, curvature);
  return -geometry::lorentz_distance(pa, pb);
}

ad::Var similarity_matrix(const ad::Var& a, const ad::Var& b, SimilarityKind kind, double curvature) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[1]) {
    throw ShapeError("similarity_matrix needs two matrices with equal column counts");
  }
  if (kind == SimilarityKind::kEuclideanCosine) {
    const ad::Var an = a / ad::norm(a, 1, true);
    const ad::Var bn = b / ad::norm(b, 1, true);
    return ad::matmul(an, ad::transpose(bn));
  }
  return -geometry::pairwise_distance(a, b, curvature);
}

}  // namespace hac::objectives
