#pragma once

// Hierarchical stand-in for a web-scale image-text corpus: superclasses hold
// classes, each class emits paired image/text feature vectors around its
// prototype, shifted by a fixed per-modality offset.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hac/ad/tensor.hpp"

namespace hac::corpus {

using ClassId = std::uint32_t;

struct ClassInfo {
  ClassId id = 0;
  std::uint32_t superclass = 0;
  std::string name;
  std::vector<double> prototype;
  /// Canonical caption feature of the class ("a picture of a [CLASS]").
  std::vector<double> prompt;
};

struct ConceptTaxonomy {
  std::size_t dim = 0;
  std::size_t num_superclasses = 0;
  /// Indexed by class id; ids are 0..C-1.
  std::vector<ClassInfo> classes;
  std::vector<double> image_offset;
  std::vector<double> text_offset;

  std::size_t num_classes() const { return classes.size(); }
  const ClassInfo& at(ClassId id) const;
};

struct CorpusSample {
  std::vector<double> image;
  std::vector<double> text;
  ClassId class_id = 0;
  std::uint32_t superclass = 0;

  friend bool operator==(const CorpusSample&, const CorpusSample&) = default;
};

struct Corpus {
  ConceptTaxonomy taxonomy;
  std::vector<CorpusSample> samples;
};

struct CorpusShape {
  std::size_t superclasses = 2;
  std::size_t classes_per_superclass = 4;
  std::size_t dim = 16;
  std::size_t samples_per_class = 100;
  /// Expected Euclidean norm of the per-sample noise.
  double noise = 0.1;
  /// Euclidean norm of each modality offset.
  double modality_offset = 0.5;
  /// Expected distance of a class prototype from its superclass prototype.
  double class_spread = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

Corpus generate_corpus(const CorpusShape& shape);

/// Fresh noisy samples from an existing taxonomy, `per_class` for every class.
std::vector<CorpusSample> draw_samples(const ConceptTaxonomy& taxonomy, std::size_t per_class, double noise,
                                       std::uint64_t seed);

std::vector<double> class_prompt_feature(const ConceptTaxonomy& taxonomy, ClassId id);

struct ForgetSpec {
  std::vector<ClassId> classes;

  bool contains(ClassId id) const;
  void validate(const ConceptTaxonomy& taxonomy) const;
};

/// Partition by class membership: first = retain, second = forget.
std::pair<std::vector<CorpusSample>, std::vector<CorpusSample>> split_forget(
    const std::vector<CorpusSample>& samples, const ConceptTaxonomy& taxonomy, const ForgetSpec& spec);

/// Raw feature pairs ready for encoding.
struct FeatureBatch {
  ad::Tensor image;
  ad::Tensor text;
  std::vector<bool> forget_mask;
  std::vector<ClassId> class_ids;

  std::size_t size() const { return class_ids.size(); }
};

FeatureBatch make_feature_batch(const std::vector<const CorpusSample*>& samples, const std::vector<bool>& forget_mask);

/// Draws from one pool without replacement within an epoch; each epoch walks a
/// fresh seeded permutation and drops the tail that cannot fill a request.
class EpochSampler {
 public:
  EpochSampler(std::size_t pool_size, std::uint64_t seed, bool with_replacement = false);

  std::vector<std::size_t> next(std::size_t count);
  std::size_t epoch() const { return epoch_; }

 private:
  void reshuffle();

  std::size_t pool_size_;
  bool with_replacement_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

/// Batches of N retain pairs followed by N forget pairs.
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(const std::vector<CorpusSample>& retain, const std::vector<CorpusSample>& forget,
                       std::size_t pairs_per_side, std::uint64_t seed, bool with_replacement = false);

  FeatureBatch next();

 private:
  const std::vector<CorpusSample>& retain_;
  const std::vector<CorpusSample>& forget_;
  std::size_t pairs_per_side_;
  EpochSampler retain_sampler_;
  EpochSampler forget_sampler_;
};

/// Stacks rows of samples into a feature batch with every mask entry false.
FeatureBatch stack_samples(const std::vector<CorpusSample>& samples);

}  // namespace hac::corpus
