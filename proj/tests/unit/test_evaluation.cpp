#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "hac/corpus/corpus.hpp"
#include "hac/errors.hpp"
#include "hac/eval/evaluation.hpp"
#include "hac/eval/report_io.hpp"
#include "hac/objectives/similarity.hpp"
#include "hac/train/model.hpp"
#include "hac/train/trainer.hpp"

using namespace hac;
using namespace hac::eval;
using objectives::SimilarityKind;

namespace {

ad::Tensor rows_of(const std::vector<std::vector<double>>& r) {
  ad::Tensor t = ad::Tensor::zeros({r.size(), r.front().size()});
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t k = 0; k < r[i].size(); ++k) t.at(i, k) = r[i][k];
  return t;
}

struct Trained {
  corpus::Corpus corpus;
  train::ModelParams model;
};

Trained trained(SimilarityKind kind) {
  corpus::CorpusShape s;
  s.superclasses = 2;
  s.classes_per_superclass = 2;
  s.dim = 8;
  s.samples_per_class = 30;
  s.noise = 0.3;
  s.seed = 3;
  Trained t{corpus::generate_corpus(s), {}};
  train::ModelConfig mc;
  mc.input_dim = 8;
  mc.embed_dim = 4;
  mc.kind = kind;
  mc.seed = 2;
  train::PretrainConfig pc;
  pc.optim.iterations = 200;
  pc.optim.pairs_per_side = 8;
  pc.optim.lr = 1e-2;
  pc.tau = 0.05;
  t.model = train::pretrain(train::ModelParams::init(mc), t.corpus.samples, pc).model;
  return t;
}

}  // namespace

TEST_CASE("classification picks the most similar prompt") {
  auto prompts = rows_of({{1, 0}, {0, 1}, {-1, 0}});
  auto images = rows_of({{0.9, 0.1}, {0.1, 2.0}, {-3, 0.2}});
  CHECK(classify_embeddings(images, prompts, SimilarityKind::kEuclideanCosine, 1.0) ==
        std::vector<ClassId>{0, 1, 2});

  auto twins = rows_of({{0, 1}, {0, 1}, {1, 0}});
  CHECK(classify_embeddings(rows_of({{0.2, 1}}), twins, SimilarityKind::kEuclideanCosine, 1.0) ==
        std::vector<ClassId>{0});
  auto hyp_twins = rows_of({{0.4, 0.1}, {0.4, 0.1}});
  CHECK(classify_embeddings(rows_of({{0.3, 0.2}}), hyp_twins, SimilarityKind::kHyperbolicNegDistance, 1.0) ==
        std::vector<ClassId>{0});

  CHECK_THROWS_AS(classify_embeddings(images, rows_of({{1, 0}}), SimilarityKind::kEuclideanCosine, 1.0),
                  ValidationError);
}

TEST_CASE("zero-shot predictions match a brute-force nearest prompt") {
  for (auto kind : {SimilarityKind::kEuclideanCosine, SimilarityKind::kHyperbolicNegDistance}) {
    auto t = trained(kind);
    auto batch = corpus::stack_samples(t.corpus.samples);
    auto pred = zero_shot_classify(t.model, batch.image, prompt_matrix(t.corpus.taxonomy));
    auto img = train::embed_images(t.model, batch.image);
    auto txt = train::embed_texts(t.model, prompt_matrix(t.corpus.taxonomy));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < img.rows(); ++i) {
      ClassId best = 0;
      double best_s = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < txt.rows(); ++k) {
        double s;
        if (kind == SimilarityKind::kEuclideanCosine) {
          double dot = 0, na = 0, nb = 0;
          for (std::size_t j = 0; j < img.cols(); ++j) {
            dot += img.at(i, j) * txt.at(k, j);
            na += img.at(i, j) * img.at(i, j);
            nb += txt.at(k, j) * txt.at(k, j);
          }
          s = dot / std::sqrt(na * nb);
        } else {
          double dot = 0, na = 1, nb = 1;
          for (std::size_t j = 0; j < img.cols(); ++j) {
            dot += img.at(i, j) * txt.at(k, j);
            na += img.at(i, j) * img.at(i, j);
            nb += txt.at(k, j) * txt.at(k, j);
          }
          s = -std::acosh(std::max(1.0, std::sqrt(na * nb) - dot));
        }
        if (s > best_s) {
          best_s = s;
          best = static_cast<ClassId>(k);
        }
      }
      CHECK(pred[i] == best);
      correct += pred[i] == batch.class_ids[i];
    }
    CHECK(static_cast<double>(correct) / img.rows() >= 0.8);
  }
}

TEST_CASE("classification is invariant to monotone rescaling of embeddings") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  ad::Tensor images = ad::Tensor::zeros({30, 3}), prompts = ad::Tensor::zeros({5, 3});
  for (double& v : images.values()) v = n(rng);
  for (double& v : prompts.values()) v = n(rng);
  auto base = classify_embeddings(images, prompts, SimilarityKind::kEuclideanCosine, 1.0);
  ad::Tensor scaled = images;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) scaled.at(i, k) *= 1.0 + i;
  CHECK(classify_embeddings(scaled, prompts, SimilarityKind::kEuclideanCosine, 1.0) == base);
}

TEST_CASE("retain and forget accuracy") {
  corpus::ForgetSpec spec{{1}};
  std::vector<ClassId> labels{0, 1, 2, 1, 0};
  auto all = retain_forget_accuracy(labels, labels, spec);
  CHECK(*all.retain == 1.0);
  CHECK(*all.forget == 1.0);
  auto target = retain_forget_accuracy({0, 0, 2, 2, 0}, labels, spec);
  CHECK(*target.retain == 1.0);
  CHECK(*target.forget == 0.0);
  auto undefined = retain_forget_accuracy({0, 2}, {0, 2}, spec);
  CHECK_FALSE(undefined.forget.has_value());

  std::mt19937_64 rng(10);
  std::vector<ClassId> pred(100), truth(100);
  for (std::size_t i = 0; i < 100; ++i) {
    truth[i] = rng() % 4;
    pred[i] = rng() % 4;
  }
  corpus::ForgetSpec two{{0, 3}};
  std::size_t r_hit = 0, r_n = 0, f_hit = 0, f_n = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const bool f = truth[i] == 0 || truth[i] == 3;
    (f ? f_n : r_n) += 1;
    (f ? f_hit : r_hit) += pred[i] == truth[i];
  }
  auto acc = retain_forget_accuracy(pred, truth, two);
  CHECK(*acc.retain == static_cast<double>(r_hit) / r_n);
  CHECK(*acc.forget == static_cast<double>(f_hit) / f_n);

  auto cm = confusion_matrix(pred, truth, 4);
  std::size_t total = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      std::size_t count = 0;
      for (std::size_t k = 0; k < 100; ++k) count += truth[k] == i && pred[k] == j;
      CHECK(cm[i][j] == count);
      total += cm[i][j];
    }
  CHECK(total == 100);
  auto from_cm = accuracy_from_confusion(cm, two);
  CHECK(*from_cm.retain == *acc.retain);
  CHECK(*from_cm.forget == *acc.forget);
}

TEST_CASE("confusion matrix shapes") {
  auto diag = confusion_matrix({0, 1, 2, 2}, {0, 1, 2, 2}, 3);
  CHECK(diag[2][2] == 2);
  CHECK(diag[0][1] == 0);
  auto col = confusion_matrix({0, 0, 0}, {0, 1, 2}, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(col[i][0] == 1);
    CHECK(col[i][1] + col[i][2] == 0);
  }
  CHECK_THROWS_AS(confusion_matrix({0, 3}, {0, 1}, 3), ValidationError);
  CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}, 3), ShapeError);
  CHECK(confusion_csv(diag).rfind("true\\pred,0,1,2\n0,1,0,0\n", 0) == 0);
}

TEST_CASE("linear probe") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 0.3);
  SUBCASE("separable two-class toy") {
    ad::Tensor x = ad::Tensor::zeros({80, 2});
    std::vector<ClassId> labels;
    for (std::size_t i = 0; i < 80; ++i) {
      const ClassId c = i % 2;
      x.at(i, 0) = (c ? 2.0 : -2.0) + n(rng);
      x.at(i, 1) = n(rng);
      labels.push_back(c);
    }
    auto acc = linear_probe(x, labels, 2, corpus::ForgetSpec{{1}}, ProbeConfig{});
    CHECK(*acc.retain == 1.0);
    CHECK(*acc.forget == 1.0);
  }
  SUBCASE("shuffled labels stay near chance") {
    ad::Tensor x = ad::Tensor::zeros({400, 4});
    for (double& v : x.values()) v = n(rng);
    std::vector<ClassId> labels;
    for (std::size_t i = 0; i < 400; ++i) labels.push_back(i % 4);
    std::shuffle(labels.begin(), labels.end(), rng);
    auto acc = linear_probe(x, labels, 4, corpus::ForgetSpec{{0}}, ProbeConfig{});
    const double overall = (*acc.retain * 3 + *acc.forget) / 4;
    CHECK(std::fabs(overall - 0.25) <= 0.1);
  }
  SUBCASE("identical embeddings are rejected") {
    ad::Tensor x = ad::Tensor::full({10, 3}, 0.5);
    std::vector<ClassId> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    CHECK_THROWS_AS(linear_probe(x, labels, 2, corpus::ForgetSpec{{1}}, ProbeConfig{}), ValidationError);
  }
}

TEST_CASE("evaluation report") {
  auto t = trained(SimilarityKind::kHyperbolicNegDistance);
  corpus::ForgetSpec spec{{0}};
  EvalOptions opts;
  opts.probe.iterations = 100;
  auto a = evaluate(t.model, t.corpus.taxonomy, t.corpus.samples, spec, opts);
  auto b = evaluate(t.model, t.corpus.taxonomy, t.corpus.samples, spec, opts);
  CHECK(report_json(a, true).dump() == report_json(b, true).dump());
  for (std::size_t i = 0; i < a.confusion.size(); ++i) {
    std::size_t row = 0;
    for (auto v : a.confusion[i]) row += v;
    CHECK(row == 30);
  }
  auto from_cm = accuracy_from_confusion(a.confusion, spec);
  CHECK(*from_cm.retain == *a.r_acc);
  CHECK(*from_cm.forget == *a.f_acc);
  CHECK(a.probe_f_acc.has_value());

  auto probe = probe_features(t.model, corpus::stack_samples(t.corpus.samples).image);
  CHECK(probe.cols() == 5);

  auto [retain, forget] = corpus::split_forget(t.corpus.samples, t.corpus.taxonomy, spec);
  auto audit = audit_models(t.model, t.model, retain, forget);
  CHECK(audit.retain_drift == 0.0);
  CHECK(audit.forget_drift == 0.0);
  CHECK_THROWS_AS(audit_models(t.model, t.model, retain, {}), ValidationError);
  CHECK_THROWS_AS(evaluate(t.model, t.corpus.taxonomy, {}, spec, opts), ValidationError);
  auto j = report_json(a, false);
  CHECK_FALSE(j.contains("probe_r_acc"));
  CHECK(j["confusion"].size() == 4);
}
