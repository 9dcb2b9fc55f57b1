#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hac/corpus/corpus.hpp"
#include "hac/objectives/losses.hpp"
#include "hac/train/model.hpp"
#include "hac/train/optim.hpp"

namespace hac::train {

struct PretrainConfig {
  OptimConfig optim = OptimConfig::desk_scale();
  double tau = 0.01;
  /// Weight of the image-in-caption-cone term for hyperbolic models.
  double entailment_weight = 0.2;
};

struct PretrainLogRow {
  std::size_t iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct PretrainResult {
  ModelParams model;
  std::vector<PretrainLogRow> log;
};

/// Contrastive pretraining on batches of 2N pairs drawn epoch-wise from the
/// whole corpus.
PretrainResult pretrain(ModelParams model, const std::vector<corpus::CorpusSample>& samples,
                        const PretrainConfig& config);

struct UnlearnConfig {
  OptimConfig optim = OptimConfig::desk_scale();
  objectives::UnlearnHyperParams hp;
  objectives::UnlearnMode mode = objectives::UnlearnMode::kAc;
  objectives::NormRegMode norm_mode = objectives::NormRegMode::kGeodesic;
};

struct UnlearnLogRow {
  std::size_t iteration = 0;
  double lr = 0.0;
  double retain = 0.0;
  double negative = 0.0;
  double positive = 0.0;
  double performance = 0.0;
  double retain_entailment = 0.0;
  double forget_entailment = 0.0;
  double norm_reg = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
};

struct UnlearnResult {
  ModelParams model;
  std::vector<UnlearnLogRow> log;
};

/// Alignment-calibration unlearning on balanced retain/forget batches, with
/// clipping and a cosine schedule. The input model is left untouched.
UnlearnResult unlearn(const ModelParams& original, const std::vector<corpus::CorpusSample>& retain,
                      const std::vector<corpus::CorpusSample>& forget, const UnlearnConfig& config);

/// Evaluates the configured objective on one batch, without updating.
objectives::LossBreakdown evaluate_objective(const BoundModel& bound, const ModelParams& model,
                                             const corpus::FeatureBatch& batch, const UnlearnConfig& config);

}  // namespace hac::train
