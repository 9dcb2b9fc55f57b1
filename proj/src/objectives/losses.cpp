#include "hac/objectives/losses.hpp"

#include <cmath>

#include "hac/errors.hpp"

namespace hac::objectives {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("temperature tau must be positive");
}

void require_hyperbolic(const EmbeddingBatch& batch, const char* what) {
  if (batch.kind != SimilarityKind::kHyperbolicNegDistance) {
    throw ValidationError(std::string(what) + " needs a hyperbolic batch");
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

ad::Var batch_similarity(const EmbeddingBatch& batch) {
  return similarity_matrix(batch.image, batch.text, batch.kind, batch.geometry.curvature);
}

// (1/2P) * sum over positives p of [lse_j S(p, j)/tau + lse_j S(j, p)/tau] - (1/P) sum S(p, p)/tau
ad::Var contrastive_from_similarity(const ad::Var& sim, const std::vector<std::size_t>& positives, double tau) {
  const std::size_t m = sim.shape()[0];
  const ad::Var logits = sim / tau;
  const ad::Var image_to_text = ad::logsumexp(ad::block(logits, positives, iota(m)), 1);
  const ad::Var text_to_image = ad::logsumexp(ad::block(logits, iota(m), positives), 0);
  const ad::Var partition = (ad::sum(image_to_text) + ad::sum(text_to_image)) / (2.0 * positives.size());
  return partition - ad::mean(ad::diagonal(ad::block(logits, positives, positives)));
}

ad::Var negative_from_similarity(const ad::Var& sim, const std::vector<std::size_t>& forget, double tau) {
  const double n = static_cast<double>(forget.size());
  const ad::Var sf = ad::block(sim, forget, forget);
  // sum_{i != j} [S(i, j) + S(j, i)] = 2 (sum S - trace S)
  const ad::Var off_diagonal = ad::sum(sf) - ad::sum(ad::diagonal(sf));
  return off_diagonal * (-2.0 / (2.0 * n * n * tau));
}

ad::Var positive_from_similarity(const ad::Var& sim, const std::vector<std::size_t>& forget, double tau) {
  return ad::mean(ad::diagonal(ad::block(sim, forget, forget))) / tau;
}

ad::Var performance_from_similarity(const ad::Var& sim, const std::vector<std::size_t>& forget, double tau) {
  const std::size_t m = sim.shape()[0];
  const ad::Var logits = sim / tau;
  const ad::Var image_side = ad::logsumexp(ad::block(logits, forget, iota(m)), 1);
  const ad::Var text_side = ad::logsumexp(ad::block(logits, iota(m), forget), 0);
  return (ad::sum(image_side) + ad::sum(text_side)) / (2.0 * forget.size()) - std::log(static_cast<double>(m));
}

ad::Var entailment_hinge(const EmbeddingBatch& batch, const std::vector<std::size_t>& ids, bool inside) {
  const ad::Var xs = ad::rows(batch.image, ids);
  const ad::Var ts = ad::rows(batch.text, ids);
  const ad::Var ext = geometry::exterior_angle(xs, ts, batch.geometry);
  const ad::Var aper = geometry::half_aperture(ts, batch.geometry);
  return ad::mean(ad::relu(inside ? aper - ext : ext - aper));
}

ad::Var norm_from_rows(const EmbeddingBatch& batch, const std::vector<std::size_t>& ids, NormRegMode mode) {
  const double c = batch.geometry.curvature;
  const ad::Var xs = ad::rows(batch.image, ids);
  const ad::Var ts = ad::rows(batch.text, ids);
  if (mode == NormRegMode::kGeodesic) {
    return ad::mean(geometry::distance_to_origin(xs, c) + geometry::distance_to_origin(ts, c));
  }
  return ad::mean(geometry::lorentz_norm(xs, c) + geometry::lorentz_norm(ts, c));
}

std::vector<std::size_t> nonempty(std::vector<std::size_t> ids, const char* what) {
  if (ids.empty()) throw ValidationError(std::string(what) + " set is empty");
  return ids;
}

}  // namespace

void UnlearnHyperParams::validate() const {
  check_tau(tau);
  for (double w : {alpha, beta, gamma, epsilon, omega_r, omega_f, lambda_reg}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("unlearning weights must be finite and non-negative");
  }
}

std::string_view to_string(UnlearnMode mode) {
  switch (mode) {
    case UnlearnMode::kAc: return "ac";
    case UnlearnMode::kHac: return "hac";
    case UnlearnMode::kHacReg: return "hac-reg";
  }
  return "ac";
}

UnlearnMode unlearn_mode_from_string(std::string_view name) {
  if (name == "ac") return UnlearnMode::kAc;
  if (name == "hac") return UnlearnMode::kHac;
  if (name == "hac-reg") return UnlearnMode::kHacReg;
  throw ValidationError("unknown unlearning mode '" + std::string(name) + "'");
}

std::vector<std::size_t> EmbeddingBatch::retain_ids() const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < forget_mask.size(); ++i) {
    if (!forget_mask[i]) ids.push_back(i);
  }
  return ids;
}

std::vector<std::size_t> EmbeddingBatch::forget_ids() const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < forget_mask.size(); ++i) {
    if (forget_mask[i]) ids.push_back(i);
  }
  return ids;
}

EmbeddingBatch EmbeddingBatch::slice(const std::vector<std::size_t>& ids) const {
  EmbeddingBatch out{ad::rows(image, ids), ad::rows(text, ids), {}, kind, geometry};
  out.forget_mask.reserve(ids.size());
  for (std::size_t i : ids) out.forget_mask.push_back(forget_mask.at(i));
  return out;
}

void EmbeddingBatch::validate() const {
  if (!image.valid() || !text.valid()) throw ValidationError("embedding batch without embeddings");
  if (image.shape().size() != 2 || text.shape().size() != 2) throw ShapeError("embeddings must be matrices");
  if (image.shape()[0] != text.shape()[0]) throw ShapeError("image and text counts differ");
  if (image.shape()[1] != text.shape()[1]) throw ShapeError("image and text dimensions differ");
  if (forget_mask.size() != image.shape()[0]) throw ShapeError("forget mask length differs from batch size");
}

ad::Var info_nce_loss(const ad::Var& z, const std::vector<std::size_t>& positive, double tau,
                      SimilarityKind kind, double curvature) {
  check_tau(tau);
  const std::size_t n = z.shape()[0];
  if (n < 2) throw ValidationError("InfoNCE needs at least two samples");
  if (positive.size() != n) throw ShapeError("InfoNCE needs one positive index per sample");
  const ad::Var logits = similarity_matrix(z, z, kind, curvature) / tau;
  std::vector<std::size_t> others, positives;
  others.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i] == i || positive[i] >= n) throw ValidationError("InfoNCE positive must be another sample");
    positives.push_back(i * n + positive[i]);
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) others.push_back(i * n + k);
    }
  }
  const ad::Var denominators = ad::logsumexp(ad::take(logits, std::move(others), {n, n - 1}), 1);
  const ad::Var numerators = ad::take(logits, std::move(positives), {n});
  return ad::mean(denominators - numerators);
}

ad::Var clip_contrastive_loss(const EmbeddingBatch& batch, double tau) {
  check_tau(tau);
  batch.validate();
  if (batch.size() == 0) throw ValidationError("contrastive loss on an empty batch");
  return contrastive_from_similarity(batch_similarity(batch), iota(batch.size()), tau);
}

ad::Var retain_loss(const EmbeddingBatch& all, double tau) {
  check_tau(tau);
  all.validate();
  return contrastive_from_similarity(batch_similarity(all), nonempty(all.retain_ids(), "retain"), tau);
}

ad::Var negative_alignment_loss(const EmbeddingBatch& forget, double tau) {
  check_tau(tau);
  forget.validate();
  if (forget.size() == 0) throw ValidationError("forget set is empty");
  return negative_from_similarity(batch_similarity(forget), iota(forget.size()), tau);
}

ad::Var positive_alignment_loss(const EmbeddingBatch& forget, double tau) {
  check_tau(tau);
  forget.validate();
  if (forget.size() == 0) throw ValidationError("forget set is empty");
  return positive_from_similarity(batch_similarity(forget), iota(forget.size()), tau);
}

ad::Var performance_preserving_loss(const EmbeddingBatch& all, double tau) {
  check_tau(tau);
  all.validate();
  return performance_from_similarity(batch_similarity(all), nonempty(all.forget_ids(), "forget"), tau);
}

ad::Var forget_loss(const EmbeddingBatch& all, const UnlearnHyperParams& hp) {
  hp.validate();
  all.validate();
  const auto forget = nonempty(all.forget_ids(), "forget");
  const ad::Var sim = batch_similarity(all);
  return negative_from_similarity(sim, forget, hp.tau) * hp.alpha +
         positive_from_similarity(sim, forget, hp.tau) * hp.beta +
         performance_from_similarity(sim, forget, hp.tau) * hp.gamma;
}

ad::Var ac_total(const EmbeddingBatch& all, const UnlearnHyperParams& hp) {
  return unlearning_objective(all, hp, UnlearnMode::kAc).total;
}

ad::Var retain_entailment_loss(const EmbeddingBatch& retain) {
  retain.validate();
  require_hyperbolic(retain, "retain entailment loss");
  if (retain.size() == 0) throw ValidationError("retain set is empty");
  return entailment_hinge(retain, iota(retain.size()), false);
}

ad::Var forget_entailment_loss(const EmbeddingBatch& forget) {
  forget.validate();
  require_hyperbolic(forget, "forget entailment loss");
  if (forget.size() == 0) throw ValidationError("forget set is empty");
  return entailment_hinge(forget, iota(forget.size()), true);
}

ad::Var hac_total(const EmbeddingBatch& all, const UnlearnHyperParams& hp) {
  return unlearning_objective(all, hp, UnlearnMode::kHac).total;
}

ad::Var norm_regularization(const EmbeddingBatch& forget, NormRegMode mode) {
  forget.validate();
  require_hyperbolic(forget, "norm regularisation");
  if (forget.size() == 0) throw ValidationError("forget set is empty");
  return norm_from_rows(forget, iota(forget.size()), mode);
}

ad::Var hac_reg_total(const EmbeddingBatch& all, const UnlearnHyperParams& hp, NormRegMode mode) {
  return unlearning_objective(all, hp, UnlearnMode::kHacReg, mode).total;
}

ad::Var pretraining_loss(const EmbeddingBatch& batch, double tau, double entailment_weight) {
  const ad::Var contrastive = clip_contrastive_loss(batch, tau);
  if (batch.kind != SimilarityKind::kHyperbolicNegDistance || entailment_weight == 0.0) return contrastive;
  return contrastive + entailment_hinge(batch, iota(batch.size()), false) * entailment_weight;
}

LossBreakdown unlearning_objective(const EmbeddingBatch& all, const UnlearnHyperParams& hp, UnlearnMode mode,
                                   NormRegMode norm_mode) {
  hp.validate();
  all.validate();
  if (mode != UnlearnMode::kAc) require_hyperbolic(all, "hyperbolic alignment calibration");
  const auto retain = nonempty(all.retain_ids(), "retain");
  const auto forget = nonempty(all.forget_ids(), "forget");

  const ad::Var sim = batch_similarity(all);
  LossBreakdown out;
  out.retain = contrastive_from_similarity(sim, retain, hp.tau);
  out.negative = negative_from_similarity(sim, forget, hp.tau);
  out.positive = positive_from_similarity(sim, forget, hp.tau);
  out.performance = performance_from_similarity(sim, forget, hp.tau);
  const ad::Var forget_term = out.negative * hp.alpha + out.positive * hp.beta + out.performance * hp.gamma;
  out.total = out.retain + forget_term * hp.epsilon;
  if (mode == UnlearnMode::kAc) return out;

  out.retain_entailment = entailment_hinge(all, retain, false);
  out.forget_entailment = entailment_hinge(all, forget, true);
  out.total = out.total + out.retain_entailment * hp.omega_r + out.forget_entailment * hp.omega_f;
  if (mode == UnlearnMode::kHac) return out;

  out.norm_reg = norm_from_rows(all, forget, norm_mode);
  out.total = out.total + out.norm_reg * hp.lambda_reg;
  return out;
}

}  // namespace hac::objectives
