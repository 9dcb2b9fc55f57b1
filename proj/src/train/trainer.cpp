#include "hac/train/trainer.hpp"

#include <sstream>

#include "hac/errors.hpp"

namespace hac::train {

namespace {

// Backward, clip, Adam. Returns the pre-clip gradient norm.
double apply_update(const ad::Graph& graph, const ad::Var& loss, const BoundModel& bound, ModelParams& model,
                    AdamState& state, const OptimConfig& optim, double lr_now) {
  const ad::GradientMap grads = graph.backward(loss, bound.parameters());
  std::vector<ad::Tensor> g;
  g.reserve(bound.parameters().size());
  for (const ad::Var& p : bound.parameters()) g.push_back(grads.at(p));
  const double norm = clip_gradients(g, optim.clip_norm);
  std::vector<ad::Tensor*> params;
  for (auto& [name, tensor] : model.named_parameters()) params.push_back(tensor);
  adam_step(params, g, state, optim, lr_now);
  return norm;
}

double value_or_zero(const ad::Var& v) { return v.valid() ? v.item() : 0.0; }

std::string describe(const UnlearnLogRow& row) {
  std::ostringstream os;
  os << "retain=" << row.retain << " neg=" << row.negative << " pos=" << row.positive
     << " perf=" << row.performance << " r_ent=" << row.retain_entailment << " f_ent=" << row.forget_entailment
     << " norm_reg=" << row.norm_reg << " total=" << row.total;
  return os.str();
}

}  // namespace

PretrainResult pretrain(ModelParams model, const std::vector<corpus::CorpusSample>& samples,
                        const PretrainConfig& config) {
  config.optim.validate();
  if (samples.empty()) throw ValidationError("pretraining corpus is empty");
  if (!(config.tau > 0.0)) throw ValidationError("temperature tau must be positive");

  PretrainResult result;
  const std::size_t batch_size = 2 * config.optim.pairs_per_side;
  corpus::EpochSampler sampler(samples.size(), config.optim.seed, samples.size() < batch_size);
  AdamState state;
  for (std::size_t it = 0; it < config.optim.iterations; ++it) {
    std::vector<const corpus::CorpusSample*> picked;
    for (std::size_t i : sampler.next(batch_size)) picked.push_back(&samples[i]);
    const corpus::FeatureBatch batch = corpus::make_feature_batch(picked, std::vector<bool>(picked.size(), false));
    const double lr_now = cosine_lr(it, config.optim.iterations, config.optim.lr);
    try {
      ad::Graph graph;
      BoundModel bound(graph, model, true);
      const auto emb = encode(bound, model, batch.image, batch.text, batch.forget_mask);
      const ad::Var loss = objectives::pretraining_loss(emb, config.tau, config.entailment_weight);
      const double norm = apply_update(graph, loss, bound, model, state, config.optim, lr_now);
      result.log.push_back({it, lr_now, loss.item(), norm});
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "pretraining diverged at iteration " << it << ": " << e.what();
      if (!result.log.empty()) os << " (previous loss " << result.log.back().loss << ")";
      throw NumericalError(os.str());
    }
  }
  result.model = std::move(model);
  return result;
}

objectives::LossBreakdown evaluate_objective(const BoundModel& bound, const ModelParams& model,
                                             const corpus::FeatureBatch& batch, const UnlearnConfig& config) {
  const auto emb = encode(bound, model, batch.image, batch.text, batch.forget_mask);
  return objectives::unlearning_objective(emb, config.hp, config.mode, config.norm_mode);
}

UnlearnResult unlearn(const ModelParams& original, const std::vector<corpus::CorpusSample>& retain,
                      const std::vector<corpus::CorpusSample>& forget, const UnlearnConfig& config) {
  config.optim.validate();
  config.hp.validate();
  if (retain.empty() || forget.empty()) throw ValidationError("unlearning needs non-empty retain and forget sets");
  if (config.mode != objectives::UnlearnMode::kAc &&
      original.kind != objectives::SimilarityKind::kHyperbolicNegDistance) {
    throw ValidationError("hyperbolic unlearning modes need a hyperbolic model");
  }

  UnlearnResult result;
  result.model = original;
  ModelParams& model = result.model;
  const std::size_t n = config.optim.pairs_per_side;
  corpus::BalancedBatchSampler sampler(retain, forget, n, config.optim.seed,
                                       retain.size() < n || forget.size() < n);
  AdamState state;
  for (std::size_t it = 0; it < config.optim.iterations; ++it) {
    const corpus::FeatureBatch batch = sampler.next();
    const double lr_now = cosine_lr(it, config.optim.iterations, config.optim.lr);
    try {
      ad::Graph graph;
      BoundModel bound(graph, model, true);
      const objectives::LossBreakdown terms = evaluate_objective(bound, model, batch, config);
      UnlearnLogRow row;
      row.iteration = it;
      row.lr = lr_now;
      row.retain = value_or_zero(terms.retain);
      row.negative = value_or_zero(terms.negative);
      row.positive = value_or_zero(terms.positive);
      row.performance = value_or_zero(terms.performance);
      row.retain_entailment = value_or_zero(terms.retain_entailment);
      row.forget_entailment = value_or_zero(terms.forget_entailment);
      row.norm_reg = value_or_zero(terms.norm_reg);
      row.total = terms.total.item();
      result.log.push_back(row);
      result.log.back().grad_norm = apply_update(graph, terms.total, bound, model, state, config.optim, lr_now);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "unlearning diverged at iteration " << it << ": " << e.what();
      if (!result.log.empty()) os << " (last components: " << describe(result.log.back()) << ")";
      throw NumericalError(os.str());
    }
  }
  return result;
}

}  // namespace hac::train
