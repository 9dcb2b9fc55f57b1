#pragma once
// EvalReport JSON object:
//   {
//     "r_acc": number | null,          // null when no retain-class sample
//     "f_acc": number | null,
//     "per_class_accuracy": [number | null, ...],   // indexed by class id
//     "confusion": [[count, ...], ...],             // row = true class
//     "probe_r_acc": number | null,    // absent when the probe did not run
//     "probe_f_acc": number | null,
//     "audit": { ...audit object... }  // absent unless an audit ran
//   }
// Audit object: image_side_fraction, text_side_fraction, retain_drift,
// forget_drift, retain_pairs, forget_pairs.
// Confusion CSV: header `true\pred,0,1,...`, then one row per true class.
#include <filesystem>
#include <string>

#include <json.hpp>

#include "hac/eval/evaluation.hpp"

namespace hac::eval {

nlohmann::ordered_json report_json(const EvalReport& report, bool include_probe);
nlohmann::ordered_json audit_json(const objectives::AuditReport& audit);
std::string confusion_csv(const ConfusionMatrix& confusion);

/// Writes `text` to `path`, replacing any existing file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hac::eval
