#pragma once
// Run configuration: one JSON document, unknown keys rejected. See
// configs/*.json for complete examples and README.md for every field.
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hac/corpus/corpus.hpp"
#include "hac/corpus/feature_io.hpp"
#include "hac/eval/evaluation.hpp"
#include "hac/objectives/losses.hpp"
#include "hac/train/optim.hpp"

namespace hac::cli {

enum class RunMode { kClipAc, kMeruHac, kMeruHacReg };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

struct FeatureSource {
  std::filesystem::path path;
  corpus::FeatureFormat format = corpus::FeatureFormat::kBinary;
  std::optional<std::filesystem::path> prompts;
  /// Held-out evaluation features; the training file is reused when absent.
  std::optional<std::filesystem::path> eval_path;
};

struct ExportSpec {
  /// Empty selects every class.
  std::vector<corpus::ClassId> classes;
  std::size_t samples_per_class = 10;
};

struct RunConfig {
  RunMode mode = RunMode::kClipAc;
  std::uint64_t seed = 0;

  /// Exactly one of the two data sources is active; synthetic by default.
  corpus::CorpusShape corpus;
  std::size_t eval_samples_per_class = 100;
  std::optional<FeatureSource> features;

  std::vector<corpus::ClassId> forget_classes{0};

  std::size_t embed_dim = 8;
  std::size_t hidden_dim = 0;
  double init_scale = 1.0;

  geometry::GeometryConfig geometry;
  objectives::NormRegMode norm_reg = objectives::NormRegMode::kGeodesic;
  objectives::UnlearnHyperParams hp;

  train::OptimConfig pretrain_optim = train::OptimConfig::desk_scale();
  train::OptimConfig unlearn_optim = train::OptimConfig::desk_scale();
  double pretrain_entailment_weight = 0.2;

  bool probe_enabled = true;
  eval::ProbeConfig probe;

  ExportSpec export_spec;

  objectives::SimilarityKind kind() const;
  objectives::UnlearnMode unlearn_mode() const;
  /// Cross-field checks; throws ValidationError naming the field.
  void validate() const;
};

/// Parses and validates. Relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config, every field present. Stable key order, so equal
/// configs dump to equal bytes.
nlohmann::ordered_json config_json(const RunConfig& config);

/// Names accepted by `sweep --axis`.
const std::vector<std::string>& sweep_axes();
/// Returns a copy with one hyperparameter replaced.
RunConfig with_axis_value(const RunConfig& config, std::string_view axis, double value);

}  // namespace hac::cli
