#pragma once

// External feature files let features from any real encoder stand in for the
// synthetic corpus.
//
// Binary layout, all integers and reals little-endian:
//   magic    4 bytes  "HACF"
//   version  u32      1
//   dim      u32      D
//   count    u64      number of records
//   records  count x { class_id u32, superclass_id u32, image f64[D], text f64[D] }
//
// CSV layout: header `class_id,superclass_id,img_0..img_{D-1},txt_0..txt_{D-1}`
// followed by one record per line.
//
// Class ids must be contiguous from 0. A prompt file uses the same layout;
// its text columns are the class prompt features and its image columns are
// ignored.

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "hac/corpus/corpus.hpp"

namespace hac::corpus {

enum class FeatureFormat { kBinary, kCsv };

FeatureFormat feature_format_from_string(std::string_view name);

void write_features(const std::filesystem::path& path, const std::vector<CorpusSample>& samples, FeatureFormat format);
std::vector<CorpusSample> read_features(const std::filesystem::path& path, FeatureFormat format);

/// Corpus over externally computed features. Without a prompt file each
/// class prompt is the mean text feature of that class.
Corpus ingest_external_features(const std::filesystem::path& path, FeatureFormat format,
                                const std::optional<std::filesystem::path>& prompts = std::nullopt);

}  // namespace hac::corpus
