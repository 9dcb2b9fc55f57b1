#pragma once

// Checkpoint layout, little-endian:
//   magic       8 bytes "HACCKPT1"
//   version     u32 1
//   kind        u32 0 = euclidean-cosine, 1 = hyperbolic-negative-distance
//   curvature   f64
//   aperture_k  f64
//   acosh_eps   f64
//   count       u32 number of parameters
//   per parameter, in ModelParams::named_parameters() order:
//     name_len u32, name bytes, rank u32, dims u64[rank], values f64[prod(dims)]
//
// Identical models serialise to identical bytes.

#include <filesystem>
#include <string>

#include "hac/train/model.hpp"

namespace hac::train {

std::string checkpoint_bytes(const ModelParams& model);
ModelParams parse_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const ModelParams& model);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace hac::train
