#include "hac/corpus/feature_io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "hac/errors.hpp"
#include "hac/io.hpp"

namespace hac::corpus {

namespace {

constexpr char kMagic[4] = {'H', 'A', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

std::size_t common_dim(const std::vector<CorpusSample>& samples) {
  if (samples.empty()) throw IoError("refusing to write an empty feature file");
  const std::size_t d = samples.front().image.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].image.size() != d || samples[i].text.size() != d) {
      throw ShapeError("sample " + std::to_string(i) + " has a different feature dimension");
    }
  }
  return d;
}

void write_binary(std::ostream& os, const std::vector<CorpusSample>& samples) {
  const std::size_t d = common_dim(samples);
  os.write(kMagic, 4);
  io::put_u32(os, kVersion);
  io::put_u32(os, static_cast<std::uint32_t>(d));
  io::put_u64(os, samples.size());
  for (const CorpusSample& s : samples) {
    io::put_u32(os, s.class_id);
    io::put_u32(os, s.superclass);
    for (double v : s.image) io::put_f64(os, v);
    for (double v : s.text) io::put_f64(os, v);
  }
}

void write_csv(std::ostream& os, const std::vector<CorpusSample>& samples) {
  const std::size_t d = common_dim(samples);
  os << "class_id,superclass_id";
  for (std::size_t j = 0; j < d; ++j) os << ",img_" << j;
  for (std::size_t j = 0; j < d; ++j) os << ",txt_" << j;
  os << '\n';
  for (const CorpusSample& s : samples) {
    os << s.class_id << ',' << s.superclass;
    for (double v : s.image) os << ',' << io::format_double(v);
    for (double v : s.text) os << ',' << io::format_double(v);
    os << '\n';
  }
}

std::vector<CorpusSample> read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw IoError("empty corpus: feature file has no header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a feature file (bad magic)");
  const std::uint32_t version = io::get_u32(is);
  if (version != kVersion) throw IoError("unsupported feature file version " + std::to_string(version));
  const std::size_t d = io::get_u32(is);
  const std::uint64_t count = io::get_u64(is);
  if (count == 0) throw IoError("empty corpus: feature file has no records");
  if (d == 0) throw IoError("feature file declares dimension 0");
  std::vector<CorpusSample> samples(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    CorpusSample& s = samples[r];
    try {
      s.class_id = io::get_u32(is);
      s.superclass = io::get_u32(is);
      s.image.resize(d);
      s.text.resize(d);
      for (double& v : s.image) v = io::get_f64(is);
      for (double& v : s.text) v = io::get_f64(is);
    } catch (const IoError&) {
      throw IoError("malformed record " + std::to_string(r) + ": truncated file");
    }
  }
  return samples;
}

std::vector<CorpusSample> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.empty()) throw IoError("empty corpus: CSV feature file is empty");
  const auto header = io::split(line, ',');
  if (header.size() < 4 || (header.size() - 2) % 2 != 0 || header[0] != "class_id") {
    throw IoError("CSV feature file has a malformed header");
  }
  const std::size_t d = (header.size() - 2) / 2;
  std::vector<CorpusSample> samples;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = io::split(line, ',');
    if (fields.size() != 2 + 2 * d) {
      throw ShapeError("dimension mismatch in row " + std::to_string(row) + ": expected " +
                       std::to_string(2 + 2 * d) + " columns, found " + std::to_string(fields.size()));
    }
    CorpusSample s;
    try {
      s.class_id = static_cast<ClassId>(io::parse_u64(fields[0]));
      s.superclass = static_cast<std::uint32_t>(io::parse_u64(fields[1]));
      s.image.resize(d);
      s.text.resize(d);
      for (std::size_t j = 0; j < d; ++j) s.image[j] = io::parse_double(fields[2 + j]);
      for (std::size_t j = 0; j < d; ++j) s.text[j] = io::parse_double(fields[2 + d + j]);
    } catch (const IoError& e) {
      throw IoError("malformed record in row " + std::to_string(row) + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw IoError("empty corpus: CSV feature file has no records");
  return samples;
}

}  // namespace

FeatureFormat feature_format_from_string(std::string_view name) {
  if (name == "binary") return FeatureFormat::kBinary;
  if (name == "csv") return FeatureFormat::kCsv;
  throw ValidationError("unknown feature format '" + std::string(name) + "'");
}

void write_features(const std::filesystem::path& path, const std::vector<CorpusSample>& samples, FeatureFormat format) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  if (format == FeatureFormat::kBinary) {
    write_binary(os, samples);
  } else {
    write_csv(os, samples);
  }
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<CorpusSample> read_features(const std::filesystem::path& path, FeatureFormat format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open feature file " + path.string());
  return format == FeatureFormat::kBinary ? read_binary(is) : read_csv(is);
}

Corpus ingest_external_features(const std::filesystem::path& path, FeatureFormat format,
                                const std::optional<std::filesystem::path>& prompts) {
  Corpus corpus;
  corpus.samples = read_features(path, format);
  const std::size_t d = corpus.samples.front().image.size();

  std::map<ClassId, std::uint32_t> superclass_of;
  std::map<ClassId, std::pair<std::vector<double>, std::vector<double>>> sums;  // image, text
  std::map<ClassId, std::size_t> counts;
  for (std::size_t r = 0; r < corpus.samples.size(); ++r) {
    const CorpusSample& s = corpus.samples[r];
    if (s.image.size() != d || s.text.size() != d) {
      throw ShapeError("dimension mismatch in record " + std::to_string(r));
    }
    auto [it, inserted] = superclass_of.emplace(s.class_id, s.superclass);
    if (!inserted && it->second != s.superclass) {
      throw IoError("class " + std::to_string(s.class_id) + " appears under two superclasses");
    }
    auto& [img, txt] = sums[s.class_id];
    img.resize(d, 0.0);
    txt.resize(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      img[j] += s.image[j];
      txt[j] += s.text[j];
    }
    ++counts[s.class_id];
  }
  if (superclass_of.rbegin()->first + 1 != superclass_of.size()) {
    throw IoError("class ids must be contiguous from 0");
  }

  ConceptTaxonomy& tax = corpus.taxonomy;
  tax.dim = d;
  tax.image_offset.assign(d, 0.0);
  tax.text_offset.assign(d, 0.0);
  std::uint32_t max_super = 0;
  for (const auto& [id, super] : superclass_of) {
    ClassInfo cls;
    cls.id = id;
    cls.superclass = super;
    cls.name = "class" + std::to_string(id);
    const double n = static_cast<double>(counts[id]);
    cls.prototype = sums[id].first;
    cls.prompt = sums[id].second;
    for (double& v : cls.prototype) v /= n;
    for (double& v : cls.prompt) v /= n;
    max_super = std::max(max_super, super);
    tax.classes.push_back(std::move(cls));
  }
  tax.num_superclasses = max_super + 1;

  if (prompts) {
    const auto prompt_records = read_features(*prompts, format);
    for (const CorpusSample& p : prompt_records) {
      if (p.text.size() != d) throw ShapeError("prompt file dimension differs from feature file");
      tax.at(p.class_id);
      tax.classes[p.class_id].prompt = p.text;
    }
  }
  return corpus;
}

}  // namespace hac::corpus
