#pragma once

// Contrastive, alignment-calibration and entailment objectives over a batch
// of paired image/text embeddings.
//
// Every loss works on a similarity matrix S with S(i, j) = sim(x_i, t_j),
// cosine for Euclidean batches and negative geodesic distance for hyperbolic
// ones. In a combined unlearning batch of M = 2N pairs the retain and forget
// pairs are told apart by `forget_mask`; softmax denominators always range
// over all M candidates.

#include <cstddef>
#include <string_view>
#include <vector>

#include "hac/ad/graph.hpp"
#include "hac/geometry/lorentz.hpp"
#include "hac/objectives/similarity.hpp"

namespace hac::objectives {

struct UnlearnHyperParams {
  double alpha = 0.0;    // negative alignment
  double beta = 0.0;     // positive alignment
  double gamma = 0.0;    // performance preserving
  double epsilon = 1.0;  // weight of the whole forget loss
  double omega_r = 0.0;  // retain entailment
  double omega_f = 0.0;  // forget entailment
  double lambda_reg = 0.0;
  double tau = 0.01;

  void validate() const;
};

enum class UnlearnMode { kAc, kHac, kHacReg };

std::string_view to_string(UnlearnMode mode);
UnlearnMode unlearn_mode_from_string(std::string_view name);

/// How the norm regulariser measures distance from the origin.
enum class NormRegMode {
  /// Geodesic distance to the origin; pulls points inward.
  kGeodesic,
  /// sqrt(|<x, x>_L|), which is the constant 1/sqrt(c) on the hyperboloid.
  kLorentzian,
};

struct EmbeddingBatch {
  ad::Var image;  // M x d; space components when hyperbolic
  ad::Var text;   // M x d
  std::vector<bool> forget_mask;
  SimilarityKind kind = SimilarityKind::kEuclideanCosine;
  geometry::GeometryConfig geometry;

  std::size_t size() const { return forget_mask.size(); }
  std::vector<std::size_t> retain_ids() const;
  std::vector<std::size_t> forget_ids() const;
  /// Sub-batch of the given pairs; the mask is carried along.
  EmbeddingBatch slice(const std::vector<std::size_t>& ids) const;
  void validate() const;
};

/// Self-supervised InfoNCE: z_i's positive is z_{positive[i]}; the anchor
/// itself is excluded from its denominator.
ad::Var info_nce_loss(const ad::Var& z, const std::vector<std::size_t>& positive, double tau,
                      SimilarityKind kind, double curvature);

/// Symmetric image->text / text->image cross-entropy with diagonal positives.
ad::Var clip_contrastive_loss(const EmbeddingBatch& batch, double tau);

/// CLIP loss on the retain pairs with denominators over the whole batch.
ad::Var retain_loss(const EmbeddingBatch& all, double tau);

/// Every pair of `forget` is treated as a forget pair.
ad::Var negative_alignment_loss(const EmbeddingBatch& forget, double tau);
ad::Var positive_alignment_loss(const EmbeddingBatch& forget, double tau);

/// Mean log-partition of the forget pairs over the whole batch.
ad::Var performance_preserving_loss(const EmbeddingBatch& all, double tau);

ad::Var forget_loss(const EmbeddingBatch& all, const UnlearnHyperParams& hp);
ad::Var ac_total(const EmbeddingBatch& all, const UnlearnHyperParams& hp);

/// Hinge on images leaving the cone of their caption.
ad::Var retain_entailment_loss(const EmbeddingBatch& retain);
/// Hinge on images sitting inside the cone of their caption.
ad::Var forget_entailment_loss(const EmbeddingBatch& forget);

ad::Var hac_total(const EmbeddingBatch& all, const UnlearnHyperParams& hp);
ad::Var norm_regularization(const EmbeddingBatch& forget, NormRegMode mode = NormRegMode::kGeodesic);
ad::Var hac_reg_total(const EmbeddingBatch& all, const UnlearnHyperParams& hp,
                      NormRegMode mode = NormRegMode::kGeodesic);

/// Contrastive loss plus a weighted entailment term over all pairs, used to
/// pretrain hyperbolic models. `entailment_weight` is ignored for Euclidean
/// batches.
ad::Var pretraining_loss(const EmbeddingBatch& batch, double tau, double entailment_weight);

/// Every term of an unlearning objective, evaluated once on the same batch.
/// Terms the mode does not use are left empty (`valid() == false`).
struct LossBreakdown {
  ad::Var retain;
  ad::Var negative;
  ad::Var positive;
  ad::Var performance;
  ad::Var retain_entailment;
  ad::Var forget_entailment;
  ad::Var norm_reg;
  ad::Var total;
};

LossBreakdown unlearning_objective(const EmbeddingBatch& all, const UnlearnHyperParams& hp, UnlearnMode mode,
                                   NormRegMode norm_mode = NormRegMode::kGeodesic);

}  // namespace hac::objectives
