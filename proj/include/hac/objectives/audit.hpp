#pragma once

#include <cstddef>

#include "hac/ad/tensor.hpp"
#include "hac/objectives/similarity.hpp"

namespace hac::objectives {

/// Row-aligned image/text embeddings of sampled pairs under one model.
/// Hyperbolic rows hold space components.
struct PairEmbeddings {
  ad::Tensor image;
  ad::Tensor text;

  std::size_t size() const { return image.rows(); }
};

struct AuditReport {
  /// Forget pairs whose image is closer to some retain caption than to its own.
  double image_side_fraction = 0.0;
  /// Forget pairs whose caption is closer to some retain image than to its own.
  double text_side_fraction = 0.0;
  /// Mean |sim_after - sim_before| over retain pairs.
  double retain_drift = 0.0;
  /// Same quantity over forget pairs, for comparison.
  double forget_drift = 0.0;
  std::size_t retain_pairs = 0;
  std::size_t forget_pairs = 0;
};

struct AuditInputs {
  PairEmbeddings retain_original;
  PairEmbeddings retain_unlearned;
  PairEmbeddings forget_original;
  PairEmbeddings forget_unlearned;
  SimilarityKind kind = SimilarityKind::kEuclideanCosine;
  double curvature = 1.0;
};

/// Checks the concept-removal conditions on sampled pairs: forget pairs must
/// lose their mutual association relative to retain pairs, retain pairs must
/// keep their similarity.
AuditReport unlearning_definition_audit(const AuditInputs& inputs);

}  // namespace hac::objectives
