#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hac/ad/tensor.hpp"
#include "hac/corpus/corpus.hpp"
#include "hac/objectives/audit.hpp"
#include "hac/train/model.hpp"

namespace hac::eval {

using corpus::ClassId;

/// Argmax of similarity between each image embedding and each prompt
/// embedding; ties go to the lowest class id. Prompt row k is class k.
std::vector<ClassId> classify_embeddings(const ad::Tensor& image_embeddings, const ad::Tensor& prompt_embeddings,
                                         objectives::SimilarityKind kind, double curvature);

/// Encodes raw image features and class prompts with the model, then
/// classifies.
std::vector<ClassId> zero_shot_classify(const train::ModelParams& model, const ad::Tensor& image_features,
                                        const ad::Tensor& prompt_features);

/// Prompt features of every class, stacked by class id.
ad::Tensor prompt_matrix(const corpus::ConceptTaxonomy& taxonomy);

struct PartitionAccuracy {
  /// Empty when no sample falls in the partition.
  std::optional<double> retain;
  std::optional<double> forget;
};

PartitionAccuracy retain_forget_accuracy(const std::vector<ClassId>& predictions, const std::vector<ClassId>& labels,
                                         const corpus::ForgetSpec& forget);

/// counts[i][j] = samples of true class i predicted as j.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

ConfusionMatrix confusion_matrix(const std::vector<ClassId>& predictions, const std::vector<ClassId>& labels,
                                 std::size_t num_classes);

PartitionAccuracy accuracy_from_confusion(const ConfusionMatrix& confusion, const corpus::ForgetSpec& forget);

struct ProbeConfig {
  std::size_t iterations = 500;
  double lr = 1e-2;
  /// Fraction of each class used for training; the rest is the test split.
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression on frozen embeddings (standardised with
/// training statistics), trained full-batch with Adam.
PartitionAccuracy linear_probe(const ad::Tensor& embeddings, const std::vector<ClassId>& labels,
                               std::size_t num_classes, const corpus::ForgetSpec& forget, const ProbeConfig& config);

/// Probe features of a model's image embeddings: unit vectors, or the full
/// Lorentz coordinates (space and time) for hyperbolic models.
ad::Tensor probe_features(const train::ModelParams& model, const ad::Tensor& image_features);

struct EvalReport {
  std::optional<double> r_acc;
  std::optional<double> f_acc;
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> per_class_accuracy;
  std::optional<double> probe_r_acc;
  std::optional<double> probe_f_acc;
  std::optional<objectives::AuditReport> audit;
};

struct EvalOptions {
  bool run_probe = true;
  ProbeConfig probe;
};

EvalReport evaluate(const train::ModelParams& model, const corpus::ConceptTaxonomy& taxonomy,
                    const std::vector<corpus::CorpusSample>& samples, const corpus::ForgetSpec& forget,
                    const EvalOptions& options);

/// Runs the concept-removal audit on sampled retain and forget pairs.
objectives::AuditReport audit_models(const train::ModelParams& original, const train::ModelParams& unlearned,
                                     const std::vector<corpus::CorpusSample>& retain,
                                     const std::vector<corpus::CorpusSample>& forget);

}  // namespace hac::eval
