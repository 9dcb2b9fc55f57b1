#include "hac/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hac/errors.hpp"

namespace hac::corpus {

namespace {

constexpr int kMaxSeparationAttempts = 64;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Isotropic Gaussian vector whose expected norm is about `scale`.
std::vector<double> gaussian(std::size_t dim, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(dim)));
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

std::vector<double> unit_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  while (sq == 0.0) {
    sq = 0.0;
    for (double& x : v) {
      x = normal(rng);
      sq += x * x;
    }
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<double> plus(std::vector<double> a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

bool separated(const std::vector<ClassInfo>& classes) {
  double max_within = 0.0;
  double min_across = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = i + 1; j < classes.size(); ++j) {
      const double d = distance(classes[i].prototype, classes[j].prototype);
      if (classes[i].superclass == classes[j].superclass) {
        max_within = std::max(max_within, d);
      } else {
        min_across = std::min(min_across, d);
      }
    }
  }
  return max_within < min_across;
}

CorpusSample noisy_sample(const ClassInfo& cls, const ConceptTaxonomy& tax, double noise, std::mt19937_64& rng) {
  CorpusSample s;
  s.class_id = cls.id;
  s.superclass = cls.superclass;
  s.image = plus(plus(cls.prototype, tax.image_offset), gaussian(tax.dim, noise, rng));
  s.text = plus(plus(cls.prototype, tax.text_offset), gaussian(tax.dim, noise, rng));
  return s;
}

}  // namespace

const ClassInfo& ConceptTaxonomy::at(ClassId id) const {
  if (id >= classes.size()) throw ValidationError("unknown class id " + std::to_string(id));
  return classes[id];
}

void CorpusShape::validate() const {
  if (superclasses < 1 || classes_per_superclass < 1 || samples_per_class < 1) {
    throw ValidationError("corpus counts must be at least 1");
  }
  if (dim < 2) throw ValidationError("corpus dimension must be at least 2");
  if (!(noise >= 0.0) || !(modality_offset >= 0.0) || !(class_spread >= 0.0)) {
    throw ValidationError("corpus scales must be non-negative");
  }
}

Corpus generate_corpus(const CorpusShape& shape) {
  shape.validate();
  std::mt19937_64 rng = stream(shape.seed, 0);

  Corpus corpus;
  ConceptTaxonomy& tax = corpus.taxonomy;
  tax.dim = shape.dim;
  tax.num_superclasses = shape.superclasses;

  bool ok = false;
  for (int attempt = 0; attempt < kMaxSeparationAttempts && !ok; ++attempt) {
    tax.classes.clear();
    for (std::size_t s = 0; s < shape.superclasses; ++s) {
      const std::vector<double> centre = unit_vector(shape.dim, rng);
      for (std::size_t k = 0; k < shape.classes_per_superclass; ++k) {
        ClassInfo cls;
        cls.id = static_cast<ClassId>(tax.classes.size());
        cls.superclass = static_cast<std::uint32_t>(s);
        cls.name = "super" + std::to_string(s) + "/class" + std::to_string(cls.id);
        cls.prototype = plus(centre, gaussian(shape.dim, shape.class_spread, rng));
        tax.classes.push_back(std::move(cls));
      }
    }
    ok = separated(tax.classes);
  }
  if (!ok) {
    throw ValidationError("cannot place class prototypes closer within superclasses than across them; "
                          "reduce class_spread or increase dim");
  }

  tax.image_offset = unit_vector(shape.dim, rng);
  tax.text_offset = unit_vector(shape.dim, rng);
  for (double& v : tax.image_offset) v *= shape.modality_offset;
  for (double& v : tax.text_offset) v *= shape.modality_offset;
  for (ClassInfo& cls : tax.classes) cls.prompt = plus(cls.prototype, tax.text_offset);

  corpus.samples = draw_samples(tax, shape.samples_per_class, shape.noise, shape.seed);
  return corpus;
}

std::vector<CorpusSample> draw_samples(const ConceptTaxonomy& taxonomy, std::size_t per_class, double noise,
                                       std::uint64_t seed) {
  std::mt19937_64 rng = stream(seed, 1);
  std::vector<CorpusSample> samples;
  samples.reserve(per_class * taxonomy.num_classes());
  for (const ClassInfo& cls : taxonomy.classes) {
    for (std::size_t i = 0; i < per_class; ++i) samples.push_back(noisy_sample(cls, taxonomy, noise, rng));
  }
  return samples;
}

std::vector<double> class_prompt_feature(const ConceptTaxonomy& taxonomy, ClassId id) {
  return taxonomy.at(id).prompt;
}

bool ForgetSpec::contains(ClassId id) const {
  return std::find(classes.begin(), classes.end(), id) != classes.end();
}

void ForgetSpec::validate(const ConceptTaxonomy& taxonomy) const {
  if (classes.empty()) throw ValidationError("forget set must name at least one class");
  for (ClassId id : classes) {
    if (id >= taxonomy.num_classes()) throw ValidationError("forget class " + std::to_string(id) + " is not in the taxonomy");
  }
  std::size_t covered = 0;
  for (const ClassInfo& cls : taxonomy.classes) covered += contains(cls.id);
  if (covered == taxonomy.num_classes()) throw ValidationError("forget set covers every class; nothing left to retain");
}

std::pair<std::vector<CorpusSample>, std::vector<CorpusSample>> split_forget(
    const std::vector<CorpusSample>& samples, const ConceptTaxonomy& taxonomy, const ForgetSpec& spec) {
  spec.validate(taxonomy);
  std::pair<std::vector<CorpusSample>, std::vector<CorpusSample>> out;
  for (const CorpusSample& s : samples) {
    (spec.contains(s.class_id) ? out.second : out.first).push_back(s);
  }
  return out;
}

FeatureBatch make_feature_batch(const std::vector<const CorpusSample*>& samples, const std::vector<bool>& forget_mask) {
  if (samples.empty()) throw ValidationError("feature batch with no samples");
  const std::size_t n = samples.size(), d = samples.front()->image.size();
  std::vector<double> image, text;
  image.reserve(n * d);
  text.reserve(n * d);
  FeatureBatch batch;
  for (const CorpusSample* s : samples) {
    if (s->image.size() != d || s->text.size() != d) throw ShapeError("samples with different feature dimensions");
    image.insert(image.end(), s->image.begin(), s->image.end());
    text.insert(text.end(), s->text.begin(), s->text.end());
    batch.class_ids.push_back(s->class_id);
  }
  batch.image = ad::Tensor::matrix(n, d, std::move(image));
  batch.text = ad::Tensor::matrix(n, d, std::move(text));
  batch.forget_mask = forget_mask;
  return batch;
}

FeatureBatch stack_samples(const std::vector<CorpusSample>& samples) {
  std::vector<const CorpusSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const CorpusSample& s : samples) ptrs.push_back(&s);
  return make_feature_batch(ptrs, std::vector<bool>(samples.size(), false));
}

EpochSampler::EpochSampler(std::size_t pool_size, std::uint64_t seed, bool with_replacement)
    : pool_size_(pool_size), with_replacement_(with_replacement), rng_(stream(seed, 2)) {
  if (pool_size == 0) throw ValidationError("cannot sample from an empty pool");
  order_.resize(pool_size);
  reshuffle();
  epoch_ = 0;
}

void EpochSampler::reshuffle() {
  for (std::size_t i = 0; i < pool_size_; ++i) order_[i] = i;
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
  ++epoch_;
}

std::vector<std::size_t> EpochSampler::next(std::size_t count) {
  std::vector<std::size_t> out;
  out.reserve(count);
  if (with_replacement_) {
    std::uniform_int_distribution<std::size_t> pick(0, pool_size_ - 1);
    for (std::size_t i = 0; i < count; ++i) out.push_back(pick(rng_));
    return out;
  }
  if (count > pool_size_) {
    throw ValidationError("requested " + std::to_string(count) + " samples from a pool of " +
                          std::to_string(pool_size_) + " without replacement");
  }
  if (cursor_ + count > pool_size_) reshuffle();
  out.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
             order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + count));
  cursor_ += count;
  return out;
}

BalancedBatchSampler::BalancedBatchSampler(const std::vector<CorpusSample>& retain,
                                           const std::vector<CorpusSample>& forget, std::size_t pairs_per_side,
                                           std::uint64_t seed, bool with_replacement)
    : retain_(retain),
      forget_(forget),
      pairs_per_side_(pairs_per_side),
      retain_sampler_(retain.size(), seed * 2 + 1, with_replacement),
      forget_sampler_(forget.size(), seed * 2 + 2, with_replacement) {
  if (pairs_per_side == 0) throw ValidationError("balanced batches need at least one pair per side");
  if (!with_replacement && (retain.size() < pairs_per_side || forget.size() < pairs_per_side)) {
    throw ValidationError("not enough samples for " + std::to_string(pairs_per_side) +
                          " pairs per side without replacement");
  }
}

FeatureBatch BalancedBatchSampler::next() {
  std::vector<const CorpusSample*> picked;
  picked.reserve(2 * pairs_per_side_);
  for (std::size_t i : retain_sampler_.next(pairs_per_side_)) picked.push_back(&retain_[i]);
  for (std::size_t i : forget_sampler_.next(pairs_per_side_)) picked.push_back(&forget_[i]);
  std::vector<bool> mask(2 * pairs_per_side_, false);
  std::fill(mask.begin() + static_cast<std::ptrdiff_t>(pairs_per_side_), mask.end(), true);
  return make_feature_batch(picked, mask);
}

}  // namespace hac::corpus
