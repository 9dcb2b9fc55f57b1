#pragma once
// hac_lab verbs and the pipeline pieces they share.
//
// Every command writes into <out>/<verb>-<hash>/, where the hash covers the
// resolved config (seed included), the verb, the input checkpoint bytes and
// the sweep axis. Files:
//   pretrain           config.json loss_log.csv checkpoint.bin report.json confusion.csv
//   unlearn            config.json unlearn_log.csv checkpoint.bin report_before.json
//                      report_after.json confusion_before.csv confusion_after.csv audit.json
//   eval               config.json report.json confusion.csv
//   sweep              config.json sweep.csv, plus one unlearn layout per value in value-<v>/
//   export-embeddings  config.json embeddings.csv
// grad-check prints its table to stdout only.
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O.
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hac/cli/config.hpp"
#include "hac/corpus/corpus.hpp"
#include "hac/eval/evaluation.hpp"
#include "hac/train/trainer.hpp"

namespace hac::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;

struct RunData {
  corpus::ConceptTaxonomy taxonomy;
  std::vector<corpus::CorpusSample> train;
  std::vector<corpus::CorpusSample> eval;
  corpus::ForgetSpec forget;
};

/// Synthetic corpus (training draw plus an independent held-out draw) or
/// ingested features.
RunData prepare_data(const RunConfig& config);

train::ModelParams initial_model(const RunConfig& config, const RunData& data);
train::PretrainResult run_pretrain(const RunConfig& config, const RunData& data);
train::UnlearnResult run_unlearn(const RunConfig& config, const RunData& data, const train::ModelParams& original);
eval::EvalReport run_eval(const RunConfig& config, const RunData& data, const train::ModelParams& model);
/// Audit over the held-out retain and forget pairs.
objectives::AuditReport run_audit(const RunData& data, const train::ModelParams& original,
                                  const train::ModelParams& unlearned);

/// Throws ValidationError when the checkpoint does not fit the config.
void check_compatible(const RunConfig& config, const RunData& data, const train::ModelParams& model);

std::string pretrain_log_csv(const std::vector<train::PretrainLogRow>& log);
std::string unlearn_log_csv(const std::vector<train::UnlearnLogRow>& log);

struct GradCheckRow {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

inline constexpr double kGradCheckTolerance = 1e-4;

/// Finite-difference check of every loss at `points` seeded batches. With
/// `inject_fault` a deliberately wrong derivative is appended.
std::vector<GradCheckRow> gradient_suite(const RunConfig& config, std::size_t points, bool inject_fault = false);

struct CommandLine {
  std::string verb;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "runs";
  std::string axis;
  std::string values;
  std::size_t grad_points = 20;
  bool inject_fault = false;
};

/// Runs one verb; errors are reported on `err` and mapped to exit codes.
int run_command(const CommandLine& cmd, std::ostream& out, std::ostream& err);

/// argv front end (CLI11).
int main_entry(int argc, char** argv);

}  // namespace hac::cli
