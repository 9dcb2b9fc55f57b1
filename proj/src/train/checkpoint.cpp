#include "hac/train/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "hac/errors.hpp"
#include "hac/io.hpp"

namespace hac::train {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

struct NamedTensor {
  std::string name;
  ad::Tensor value;
};

// Rebuilds one tower from "prefix.K.weight" / "prefix.K.bias" entries.
Encoder take_encoder(const std::vector<NamedTensor>& entries, const std::string& prefix) {
  Encoder enc;
  for (std::size_t k = 0;; ++k) {
    const std::string w = prefix + std::to_string(k) + ".weight";
    const std::string b = prefix + std::to_string(k) + ".bias";
    const NamedTensor* weight = nullptr;
    const NamedTensor* bias = nullptr;
    for (const NamedTensor& e : entries) {
      if (e.name == w) weight = &e;
      if (e.name == b) bias = &e;
    }
    if (!weight && !bias) break;
    if (!weight || !bias) throw IoError("checkpoint layer " + prefix + std::to_string(k) + " is incomplete");
    if (weight->value.rank() != 2 || bias->value.rank() != 1 || bias->value.size() != weight->value.cols()) {
      throw IoError("checkpoint layer " + prefix + std::to_string(k) + " has inconsistent shapes");
    }
    enc.layers.push_back({weight->value, bias->value});
  }
  if (enc.layers.empty()) throw IoError("checkpoint has no " + prefix + " encoder");
  for (std::size_t k = 1; k < enc.layers.size(); ++k) {
    if (enc.layers[k].weight.rows() != enc.layers[k - 1].weight.cols()) {
      throw IoError("checkpoint " + prefix + " layers do not chain");
    }
  }
  return enc;
}

}  // namespace

std::string checkpoint_bytes(const ModelParams& model) {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, sizeof(kMagic));
  io::put_u32(os, kVersion);
  io::put_u32(os, model.kind == objectives::SimilarityKind::kEuclideanCosine ? 0u : 1u);
  io::put_f64(os, model.geometry.curvature);
  io::put_f64(os, model.geometry.aperture_k);
  io::put_f64(os, model.geometry.acosh_eps);
  const auto params = model.named_parameters();
  io::put_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    io::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::put_u32(os, static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t extent : tensor->shape()) io::put_u64(os, extent);
    for (double v : tensor->values()) io::put_f64(os, v);
  }
  return os.str();
}

ModelParams parse_checkpoint(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IoError("not a checkpoint file (bad magic)");
  }
  if (io::get_u32(is) != kVersion) throw IoError("unsupported checkpoint version");
  ModelParams model;
  const std::uint32_t kind = io::get_u32(is);
  if (kind > 1) throw IoError("checkpoint has an unknown similarity kind");
  model.kind = kind == 0 ? objectives::SimilarityKind::kEuclideanCosine
                         : objectives::SimilarityKind::kHyperbolicNegDistance;
  model.geometry.curvature = io::get_f64(is);
  model.geometry.aperture_k = io::get_f64(is);
  model.geometry.acosh_eps = io::get_f64(is);
  model.geometry.validate();

  const std::uint32_t count = io::get_u32(is);
  std::vector<NamedTensor> entries;
  for (std::uint32_t p = 0; p < count; ++p) {
    const std::uint32_t len = io::get_u32(is);
    if (len > 4096) throw IoError("checkpoint parameter name too long");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw IoError("truncated checkpoint");
    const std::uint32_t rank = io::get_u32(is);
    if (rank > 8) throw IoError("checkpoint tensor rank too large");
    ad::Shape shape(rank);
    for (auto& extent : shape) extent = io::get_u64(is);
    std::vector<double> values(ad::shape_size(shape));
    for (double& v : values) v = io::get_f64(is);
    entries.push_back({std::move(name), ad::Tensor(std::move(shape), std::move(values))});
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after checkpoint");

  model.image = take_encoder(entries, "image.");
  model.text = take_encoder(entries, "text.");
  if (model.image.input_dim() != model.text.input_dim() || model.image.output_dim() != model.text.output_dim()) {
    throw IoError("checkpoint encoders disagree on dimensions");
  }
  if (model.named_parameters().size() != entries.size()) throw IoError("checkpoint has unexpected parameters");
  return model;
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = checkpoint_bytes(model);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace hac::train
