#include "hac/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hac/ad/graph.hpp"
#include "hac/errors.hpp"
#include "hac/train/optim.hpp"

namespace hac::eval {

std::vector<ClassId> classify_embeddings(const ad::Tensor& images, const ad::Tensor& prompts,
                                         objectives::SimilarityKind kind, double curvature) {
  if (images.rank() != 2 || images.rows() == 0) throw ValidationError("zero-shot classification with no images");
  if (prompts.rank() != 2 || prompts.rows() < 2) throw ValidationError("zero-shot classification needs at least 2 classes");
  std::vector<ClassId> predictions(images.rows());
  for (std::size_t i = 0; i < images.rows(); ++i) {
    ClassId best = 0;
    double best_sim = objectives::row_similarity(images, i, prompts, 0, kind, curvature);
    for (std::size_t k = 1; k < prompts.rows(); ++k) {
      const double sim = objectives::row_similarity(images, i, prompts, k, kind, curvature);
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<ClassId>(k);
      }
    }
    predictions[i] = best;
  }
  return predictions;
}

std::vector<ClassId> zero_shot_classify(const train::ModelParams& model, const ad::Tensor& image_features,
                                        const ad::Tensor& prompt_features) {
  return classify_embeddings(train::embed_images(model, image_features), train::embed_texts(model, prompt_features),
                             model.kind, model.geometry.curvature);
}

ad::Tensor prompt_matrix(const corpus::ConceptTaxonomy& taxonomy) {
  std::vector<double> values;
  for (const corpus::ClassInfo& cls : taxonomy.classes) {
    const auto prompt = corpus::class_prompt_feature(taxonomy, cls.id);
    values.insert(values.end(), prompt.begin(), prompt.end());
  }
  return ad::Tensor::matrix(taxonomy.num_classes(), taxonomy.dim, std::move(values));
}

PartitionAccuracy retain_forget_accuracy(const std::vector<ClassId>& predictions, const std::vector<ClassId>& labels,
                                         const corpus::ForgetSpec& forget) {
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels differ in length");
  std::size_t rc = 0, rn = 0, fc = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool correct = predictions[i] == labels[i];
    if (forget.contains(labels[i])) {
      ++fn;
      fc += correct;
    } else {
      ++rn;
      rc += correct;
    }
  }
  PartitionAccuracy out;
  if (rn) out.retain = static_cast<double>(rc) / static_cast<double>(rn);
  if (fn) out.forget = static_cast<double>(fc) / static_cast<double>(fn);
  return out;
}

ConfusionMatrix confusion_matrix(const std::vector<ClassId>& predictions, const std::vector<ClassId>& labels,
                                 std::size_t num_classes) {
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels differ in length");
  ConfusionMatrix m(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predictions[i] >= num_classes) {
      throw ValidationError("class id out of range for a " + std::to_string(num_classes) + "-class confusion matrix");
    }
    ++m[labels[i]][predictions[i]];
  }
  return m;
}

PartitionAccuracy accuracy_from_confusion(const ConfusionMatrix& m, const corpus::ForgetSpec& forget) {
  std::size_t rc = 0, rn = 0, fc = 0, fn = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::size_t row = 0;
    for (std::size_t v : m[i]) row += v;
    if (forget.contains(static_cast<ClassId>(i))) {
      fn += row;
      fc += m[i][i];
    } else {
      rn += row;
      rc += m[i][i];
    }
  }
  PartitionAccuracy out;
  if (rn) out.retain = static_cast<double>(rc) / static_cast<double>(rn);
  if (fn) out.forget = static_cast<double>(fc) / static_cast<double>(fn);
  return out;
}

ad::Tensor probe_features(const train::ModelParams& model, const ad::Tensor& image_features) {
  const ad::Tensor emb = train::embed_images(model, image_features);
  if (model.kind == objectives::SimilarityKind::kEuclideanCosine) return emb;
  const auto lifted = geometry::LorentzBatch::from_space(emb, model.geometry.curvature);
  const std::size_t n = emb.rows(), d = emb.cols();
  ad::Tensor out = ad::Tensor::zeros({n, d + 1});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = emb.at(i, j);
    out.at(i, d) = lifted.time[i];
  }
  return out;
}

PartitionAccuracy linear_probe(const ad::Tensor& embeddings, const std::vector<ClassId>& labels,
                               std::size_t num_classes, const corpus::ForgetSpec& forget, const ProbeConfig& config) {
  if (num_classes < 2) throw ValidationError("linear probe needs at least 2 classes");
  if (embeddings.rank() != 2 || embeddings.rows() != labels.size()) {
    throw ShapeError("linear probe: embeddings and labels disagree");
  }
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw ValidationError("probe train_fraction must lie in (0, 1)");
  }
  const std::size_t n = embeddings.rows(), d = embeddings.cols();

  // Stratified split.
  std::mt19937_64 rng(config.seed);
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= num_classes) throw ValidationError("probe label out of range");
    by_class[labels[i]].push_back(i);
  }
  std::vector<std::size_t> train_ids, test_ids;
  for (auto& ids : by_class) {
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto cut = std::max<std::size_t>(1, static_cast<std::size_t>(config.train_fraction * ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) (k < cut ? train_ids : test_ids).push_back(ids[k]);
  }
  std::sort(train_ids.begin(), train_ids.end());
  std::sort(test_ids.begin(), test_ids.end());
  if (test_ids.empty()) throw ValidationError("linear probe has no test samples");

  // Standardise with training statistics.
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (std::size_t i : train_ids) {
    for (std::size_t j = 0; j < d; ++j) mu[j] += embeddings.at(i, j);
  }
  for (double& m : mu) m /= static_cast<double>(train_ids.size());
  for (std::size_t i : train_ids) {
    for (std::size_t j = 0; j < d; ++j) sd[j] += (embeddings.at(i, j) - mu[j]) * (embeddings.at(i, j) - mu[j]);
  }
  bool degenerate = true;
  for (double& s : sd) {
    s = std::sqrt(s / static_cast<double>(train_ids.size()));
    if (s > 1e-12) {
      degenerate = false;
    } else {
      s = 1.0;
    }
  }
  if (degenerate) throw ValidationError("linear probe: all embeddings are identical");

  auto standardised = [&](const std::vector<std::size_t>& ids) {
    ad::Tensor x = ad::Tensor::zeros({ids.size(), d});
    for (std::size_t r = 0; r < ids.size(); ++r) {
      for (std::size_t j = 0; j < d; ++j) x.at(r, j) = (embeddings.at(ids[r], j) - mu[j]) / sd[j];
    }
    return x;
  };
  const ad::Tensor x_train = standardised(train_ids);
  const ad::Tensor x_test = standardised(test_ids);
  std::vector<std::size_t> target_index;
  for (std::size_t r = 0; r < train_ids.size(); ++r) target_index.push_back(r * num_classes + labels[train_ids[r]]);

  ad::Tensor weight = ad::Tensor::zeros({d, num_classes});
  ad::Tensor bias = ad::Tensor::zeros({num_classes});
  train::OptimConfig adam;
  adam.lr = config.lr;
  adam.weight_decay = 0.0;
  train::AdamState state;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    ad::Graph g;
    const ad::Var w = g.variable(weight);
    const ad::Var b = g.variable(bias);
    const ad::Var logits = ad::matmul(g.constant(x_train), w) + b;
    const ad::Var picked = ad::take(logits, target_index, {train_ids.size()});
    const ad::Var loss = ad::mean(ad::logsumexp(logits, 1) - picked);
    const ad::GradientMap grads = g.backward(loss, {w, b});
    std::vector<ad::Tensor> gs{grads.at(w), grads.at(b)};
    std::vector<ad::Tensor*> params{&weight, &bias};
    train::adam_step(params, gs, state, adam, config.lr);
  }

  std::vector<ClassId> predictions, truth;
  for (std::size_t r = 0; r < test_ids.size(); ++r) {
    ClassId best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < num_classes; ++k) {
      double score = bias[k];
      for (std::size_t j = 0; j < d; ++j) score += x_test.at(r, j) * weight.at(j, k);
      if (score > best_score) {
        best_score = score;
        best = static_cast<ClassId>(k);
      }
    }
    predictions.push_back(best);
    truth.push_back(labels[test_ids[r]]);
  }
  return retain_forget_accuracy(predictions, truth, forget);
}

EvalReport evaluate(const train::ModelParams& model, const corpus::ConceptTaxonomy& taxonomy,
                    const std::vector<corpus::CorpusSample>& samples, const corpus::ForgetSpec& forget,
                    const EvalOptions& options) {
  if (samples.empty()) throw ValidationError("evaluation set is empty");
  const corpus::FeatureBatch batch = corpus::stack_samples(samples);
  const auto predictions = zero_shot_classify(model, batch.image, prompt_matrix(taxonomy));

  EvalReport report;
  const std::size_t c = taxonomy.num_classes();
  report.confusion = confusion_matrix(predictions, batch.class_ids, c);
  const PartitionAccuracy acc = retain_forget_accuracy(predictions, batch.class_ids, forget);
  report.r_acc = acc.retain;
  report.f_acc = acc.forget;
  for (std::size_t i = 0; i < c; ++i) {
    std::size_t row = 0;
    for (std::size_t v : report.confusion[i]) row += v;
    report.per_class_accuracy.push_back(row ? std::optional<double>(static_cast<double>(report.confusion[i][i]) /
                                                                    static_cast<double>(row))
                                            : std::nullopt);
  }
  if (options.run_probe) {
    const PartitionAccuracy probe =
        linear_probe(probe_features(model, batch.image), batch.class_ids, c, forget, options.probe);
    report.probe_r_acc = probe.retain;
    report.probe_f_acc = probe.forget;
  }
  return report;
}

objectives::AuditReport audit_models(const train::ModelParams& original, const train::ModelParams& unlearned,
                                     const std::vector<corpus::CorpusSample>& retain,
                                     const std::vector<corpus::CorpusSample>& forget) {
  if (retain.empty() || forget.empty()) throw ValidationError("audit needs retain and forget samples");
  const corpus::FeatureBatch r = corpus::stack_samples(retain);
  const corpus::FeatureBatch f = corpus::stack_samples(forget);
  auto pairs = [](const train::ModelParams& m, const corpus::FeatureBatch& b) {
    return objectives::PairEmbeddings{train::embed_images(m, b.image), train::embed_texts(m, b.text)};
  };
  objectives::AuditInputs in{pairs(original, r), pairs(unlearned, r), pairs(original, f), pairs(unlearned, f),
                             unlearned.kind, unlearned.geometry.curvature};
  return objectives::unlearning_definition_audit(in);
}

}  // namespace hac::eval
