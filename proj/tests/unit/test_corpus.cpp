#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "hac/corpus/corpus.hpp"
#include "hac/corpus/feature_io.hpp"
#include "hac/errors.hpp"

using namespace hac;
using namespace hac::corpus;
namespace fs = std::filesystem;

namespace {

CorpusShape small_shape(std::uint64_t seed = 1) {
  CorpusShape s;
  s.superclasses = 2;
  s.classes_per_superclass = 4;
  s.samples_per_class = 25;
  s.noise = 0.1;
  s.seed = seed;
  return s;
}

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

template <typename F>
ClassId nearest(std::size_t n, F&& dist) {
  ClassId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (ClassId k = 0; k < n; ++k) {
    const double d = dist(k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hac_lab_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("generation is deterministic and seed dependent") {
  auto a = generate_corpus(small_shape(5));
  auto b = generate_corpus(small_shape(5));
  auto c = generate_corpus(small_shape(6));
  CHECK(a.samples == b.samples);
  CHECK(a.taxonomy.image_offset == b.taxonomy.image_offset);
  CHECK_FALSE(a.samples == c.samples);
  CHECK(a.samples.size() == 200);
}

TEST_CASE("zero noise collapses each class") {
  auto shape = small_shape();
  shape.noise = 0.0;
  auto corpus = generate_corpus(shape);
  for (const auto& s : corpus.samples) {
    const auto& first = corpus.samples[s.class_id * shape.samples_per_class];
    CHECK(s.image == first.image);
    CHECK(s.text == first.text);
  }
}

TEST_CASE("nearest prototype recovers the class") {
  auto shape = small_shape(2);
  shape.samples_per_class = 50;
  auto corpus = generate_corpus(shape);
  const auto& tax = corpus.taxonomy;
  std::size_t hits = 0;
  for (const auto& s : corpus.samples) {
    const ClassId guess = nearest(tax.num_classes(), [&](ClassId k) {
      auto centre = tax.classes[k].prototype;
      for (std::size_t i = 0; i < centre.size(); ++i) centre[i] += tax.image_offset[i];
      return sq_distance(s.image, centre);
    });
    hits += guess == s.class_id;
  }
  CHECK(static_cast<double>(hits) / corpus.samples.size() >= 0.99);
}

TEST_CASE("class prompts") {
  auto shape = small_shape(3);
  shape.noise = 0.0;
  auto corpus = generate_corpus(shape);
  const auto& tax = corpus.taxonomy;
  for (ClassId k = 0; k < tax.num_classes(); ++k) {
    CHECK(class_prompt_feature(tax, k) == corpus.samples[k * shape.samples_per_class].text);
    CHECK(class_prompt_feature(tax, k) == class_prompt_feature(tax, k));
    for (ClassId j = 0; j < k; ++j) CHECK_FALSE(class_prompt_feature(tax, k) == class_prompt_feature(tax, j));
  }
  for (ClassId k = 0; k < tax.num_classes(); ++k) {
    auto image = corpus.samples[k * shape.samples_per_class].image;
    for (std::size_t d = 0; d < image.size(); ++d) image[d] += tax.text_offset[d] - tax.image_offset[d];
    const ClassId guess =
        nearest(tax.num_classes(), [&](ClassId j) { return sq_distance(image, class_prompt_feature(tax, j)); });
    CHECK(guess == k);
  }
  CHECK_THROWS_AS(class_prompt_feature(tax, 8), ValidationError);
}

TEST_CASE("split_forget") {
  auto corpus = generate_corpus(small_shape());
  auto [retain, forget] = split_forget(corpus.samples, corpus.taxonomy, ForgetSpec{{3}});
  CHECK(retain.size() == 175);
  CHECK(forget.size() == 25);
  CHECK_THROWS_AS(split_forget(corpus.samples, corpus.taxonomy, ForgetSpec{}), ValidationError);
  CHECK_THROWS_AS(split_forget(corpus.samples, corpus.taxonomy, ForgetSpec{{0, 1, 2, 3, 4, 5, 6, 7}}),
                  ValidationError);
  CHECK_THROWS_AS(split_forget(corpus.samples, corpus.taxonomy, ForgetSpec{{9}}), ValidationError);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    ForgetSpec spec;
    const std::size_t k = 1 + rng() % 7;
    std::vector<ClassId> ids{0, 1, 2, 3, 4, 5, 6, 7};
    std::shuffle(ids.begin(), ids.end(), rng);
    spec.classes.assign(ids.begin(), ids.begin() + k);
    auto [r, f] = split_forget(corpus.samples, corpus.taxonomy, spec);
    CHECK(r.size() + f.size() == corpus.samples.size());
    CHECK(f.size() == k * 25);
    for (const auto& s : r) CHECK_FALSE(spec.contains(s.class_id));
    for (const auto& s : f) CHECK(spec.contains(s.class_id));
  }
}

TEST_CASE("balanced batches") {
  auto shape = small_shape();
  shape.samples_per_class = 200;
  auto corpus = generate_corpus(shape);
  auto [retain, forget] = split_forget(corpus.samples, corpus.taxonomy, ForgetSpec{{0}});

  BalancedBatchSampler big(retain, forget, 160, 4);
  auto batch = big.next();
  CHECK(batch.size() == 320);

  for (std::size_t n : {1u, 2u, 7u, 16u, 50u}) {
    BalancedBatchSampler s(retain, forget, n, 11);
    for (int rep = 0; rep < 3; ++rep) {
      auto b = s.next();
      REQUIRE(b.size() == 2 * n);
      CHECK(b.image.rows() == 2 * n);
      for (std::size_t i = 0; i < 2 * n; ++i) {
        CHECK(b.forget_mask[i] == (i >= n));
        CHECK(b.forget_mask[i] == (b.class_ids[i] == 0));
      }
    }
  }

  BalancedBatchSampler s1(retain, forget, 8, 99), s2(retain, forget, 8, 99);
  for (int rep = 0; rep < 40; ++rep) {
    auto a = s1.next();
    auto b = s2.next();
    CHECK(a.image == b.image);
    CHECK(a.class_ids == b.class_ids);
  }

  CHECK_THROWS_AS(BalancedBatchSampler(retain, forget, 201, 1), ValidationError);
  BalancedBatchSampler with(retain, forget, 201, 1, true);
  CHECK(with.next().size() == 402);
}

TEST_CASE("epoch sampler visits every item once per epoch") {
  EpochSampler s(10, 3);
  std::vector<std::size_t> seen;
  for (int i = 0; i < 5; ++i) {
    auto ids = s.next(2);
    seen.insert(seen.end(), ids.begin(), ids.end());
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(seen[i] == i);
}

TEST_CASE("feature files round trip") {
  auto corpus = generate_corpus(small_shape(4));
  for (auto format : {FeatureFormat::kBinary, FeatureFormat::kCsv}) {
    const auto path = temp_path(format == FeatureFormat::kCsv ? "rt.csv" : "rt.bin");
    write_features(path, corpus.samples, format);
    CHECK(read_features(path, format) == corpus.samples);
    auto ingested = ingest_external_features(path, format);
    CHECK(ingested.samples == corpus.samples);
    CHECK(ingested.taxonomy.num_classes() == 8);
    CHECK(ingested.taxonomy.num_superclasses == 2);
  }
}

TEST_CASE("feature file errors") {
  SUBCASE("wrong dimension names the row") {
    const auto path = temp_path("bad_dim.csv");
    std::ofstream(path) << "class_id,superclass_id,img_0,img_1,txt_0,txt_1\n"
                        << "0,0,1,2,3,4\n"
                        << "1,0,1,2,3\n";
    try {
      read_features(path, FeatureFormat::kCsv);
      FAIL("expected an error");
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("empty files") {
    const auto csv = temp_path("empty.csv");
    std::ofstream(csv).close();
    CHECK_THROWS_WITH_AS(read_features(csv, FeatureFormat::kCsv), doctest::Contains("empty corpus"), IoError);
    const auto bin = temp_path("empty.bin");
    std::ofstream(bin).close();
    CHECK_THROWS_WITH_AS(read_features(bin, FeatureFormat::kBinary), doctest::Contains("empty corpus"), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_features(temp_path("does_not_exist.bin"), FeatureFormat::kBinary), IoError);
  }
  SUBCASE("truncated binary") {
    auto corpus = generate_corpus(small_shape(4));
    const auto path = temp_path("trunc.bin");
    write_features(path, corpus.samples, FeatureFormat::kBinary);
    fs::resize_file(path, fs::file_size(path) - 5);
    CHECK_THROWS_WITH_AS(read_features(path, FeatureFormat::kBinary), doctest::Contains("malformed record"), IoError);
  }
}

TEST_CASE("shape validation") {
  auto s = small_shape();
  s.dim = 1;
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
  s = small_shape();
  s.noise = -1;
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
  s = small_shape();
  s.class_spread = 50.0;
  CHECK_THROWS_AS(generate_corpus(s), ValidationError);
}
