#include "hac/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "hac/errors.hpp"

namespace hac::cli {

namespace {

using nlohmann::json;

enum class Bound { kAny, kNonNegative, kPositive, kUnitOpen };

// One JSON object; remembers which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "must be a JSON object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  double number(const std::string& key, double fallback, Bound bound = Bound::kAny) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    switch (bound) {
      case Bound::kAny:
        break;
      case Bound::kNonNegative:
        if (x < 0.0) fail(key, "must be >= 0");
        break;
      case Bound::kPositive:
        if (!(x > 0.0)) fail(key, "must be > 0");
        break;
      case Bound::kUnitOpen:
        if (!(x > 0.0 && x < 1.0)) fail(key, "must lie in (0, 1)");
        break;
    }
    return x;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t minimum = 0) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned()) fail(key, "must be a non-negative integer");
    const auto x = v.get<std::uint64_t>();
    if (x < minimum) fail(key, "must be >= " + std::to_string(minimum));
    return x;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<corpus::ClassId> ids(const std::string& key, std::vector<corpus::ClassId> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array()) fail(key, "must be an array of class ids");
    std::vector<corpus::ClassId> out;
    for (const json& e : v) {
      if (!e.is_number_unsigned() || e.get<std::uint64_t>() > UINT32_MAX) fail(key, "must hold class ids");
      out.push_back(static_cast<corpus::ClassId>(e.get<std::uint64_t>()));
    }
    return out;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_.at(key), qualified(key));
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "config" : path_) : qualified(key);
    throw ValidationError(where + ": " + what);
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

train::OptimConfig read_optim(Section s, train::OptimConfig o) {
  o.lr = s.number("lr", o.lr, Bound::kPositive);
  o.weight_decay = s.number("weight_decay", o.weight_decay, Bound::kNonNegative);
  o.iterations = s.count("iterations", o.iterations);
  o.clip_norm = s.number("clip_norm", o.clip_norm, Bound::kPositive);
  o.pairs_per_side = s.count("pairs_per_side", o.pairs_per_side, 1);
  o.beta1 = s.number("beta1", o.beta1, Bound::kNonNegative);
  o.beta2 = s.number("beta2", o.beta2, Bound::kNonNegative);
  if (o.beta1 >= 1.0) s.fail("beta1", "must be < 1");
  if (o.beta2 >= 1.0) s.fail("beta2", "must be < 1");
  o.adam_eps = s.number("adam_eps", o.adam_eps, Bound::kPositive);
  s.finish();
  return o;
}

nlohmann::ordered_json optim_json(const train::OptimConfig& o) {
  nlohmann::ordered_json j;
  j["lr"] = o.lr;
  j["weight_decay"] = o.weight_decay;
  j["iterations"] = o.iterations;
  j["clip_norm"] = o.clip_norm;
  j["pairs_per_side"] = o.pairs_per_side;
  j["beta1"] = o.beta1;
  j["beta2"] = o.beta2;
  j["adam_eps"] = o.adam_eps;
  return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string format_name(corpus::FeatureFormat f) { return f == corpus::FeatureFormat::kBinary ? "binary" : "csv"; }

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kClipAc:
      return "clip-ac";
    case RunMode::kMeruHac:
      return "meru-hac";
    case RunMode::kMeruHacReg:
      return "meru-hac-reg";
  }
  return "?";
}

RunMode run_mode_from_string(std::string_view name) {
  if (name == "clip-ac") return RunMode::kClipAc;
  if (name == "meru-hac") return RunMode::kMeruHac;
  if (name == "meru-hac-reg") return RunMode::kMeruHacReg;
  throw ValidationError("mode: expected clip-ac, meru-hac or meru-hac-reg, got '" + std::string(name) + "'");
}

objectives::SimilarityKind RunConfig::kind() const {
  return mode == RunMode::kClipAc ? objectives::SimilarityKind::kEuclideanCosine
                                  : objectives::SimilarityKind::kHyperbolicNegDistance;
}

objectives::UnlearnMode RunConfig::unlearn_mode() const {
  switch (mode) {
    case RunMode::kClipAc:
      return objectives::UnlearnMode::kAc;
    case RunMode::kMeruHac:
      return objectives::UnlearnMode::kHac;
    case RunMode::kMeruHacReg:
      return objectives::UnlearnMode::kHacReg;
  }
  return objectives::UnlearnMode::kAc;
}

void RunConfig::validate() const {
  auto wrap = [](const std::string& section, auto&& check) {
    try {
      check();
    } catch (const ValidationError& e) {
      throw ValidationError(section + ": " + e.what());
    }
  };
  if (!features) wrap("corpus", [&] { corpus.validate(); });
  wrap("geometry", [&] { geometry.validate(); });
  wrap("unlearn", [&] { hp.validate(); });
  wrap("pretrain_optim", [&] { pretrain_optim.validate(); });
  wrap("unlearn_optim", [&] { unlearn_optim.validate(); });
  if (embed_dim < 2) throw ValidationError("model.embed_dim: must be >= 2");
  if (!(init_scale > 0.0)) throw ValidationError("model.init_scale: must be > 0");
  if (pretrain_entailment_weight < 0.0) throw ValidationError("pretrain_entailment_weight: must be >= 0");
  if (eval_samples_per_class < 1 && !features) throw ValidationError("corpus.eval_samples_per_class: must be >= 1");

  if (mode == RunMode::kClipAc) {
    if (hp.omega_r != 0.0) throw ValidationError("unlearn.omega_r: entailment losses need a meru-* mode");
    if (hp.omega_f != 0.0) throw ValidationError("unlearn.omega_f: entailment losses need a meru-* mode");
    if (hp.lambda_reg != 0.0) throw ValidationError("unlearn.lambda_reg: norm regularisation needs mode meru-hac-reg");
  } else if (mode == RunMode::kMeruHac && hp.lambda_reg != 0.0) {
    throw ValidationError("unlearn.lambda_reg: norm regularisation needs mode meru-hac-reg");
  }

  if (forget_classes.empty()) throw ValidationError("forget_classes: must not be empty");
  if (!features) {
    const std::size_t classes = corpus.superclasses * corpus.classes_per_superclass;
    std::set<corpus::ClassId> unique(forget_classes.begin(), forget_classes.end());
    for (corpus::ClassId id : unique) {
      if (id >= classes) throw ValidationError("forget_classes: class " + std::to_string(id) + " does not exist");
    }
    if (unique.size() >= classes) throw ValidationError("forget_classes: covers every class, leaving no retain set");
    for (corpus::ClassId id : export_spec.classes) {
      if (id >= classes) throw ValidationError("export.classes: class " + std::to_string(id) + " does not exist");
    }
  } else {
    auto must_exist = [](const std::filesystem::path& p, const char* field) {
      if (!std::filesystem::exists(p)) throw ValidationError(std::string(field) + ": file not found: " + p.string());
    };
    must_exist(features->path, "features.path");
    if (features->prompts) must_exist(*features->prompts, "features.prompts");
    if (features->eval_path) must_exist(*features->eval_path, "features.eval_path");
  }
  if (export_spec.samples_per_class < 1) throw ValidationError("export.samples_per_class: must be >= 1");
}

RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Section root(doc, "");
  cfg.mode = run_mode_from_string(root.text("mode", std::string(to_string(cfg.mode))));
  cfg.seed = root.count("seed", cfg.seed);

  if (root.has("corpus") && root.has("features")) root.fail("features", "cannot be combined with corpus");
  if (root.has("corpus")) {
    Section s = root.child("corpus");
    auto& c = cfg.corpus;
    c.superclasses = s.count("superclasses", c.superclasses, 1);
    c.classes_per_superclass = s.count("classes_per_superclass", c.classes_per_superclass, 1);
    c.dim = s.count("dim", c.dim, 2);
    c.samples_per_class = s.count("samples_per_class", c.samples_per_class, 1);
    c.noise = s.number("noise", c.noise, Bound::kNonNegative);
    c.modality_offset = s.number("modality_offset", c.modality_offset, Bound::kNonNegative);
    c.class_spread = s.number("class_spread", c.class_spread, Bound::kNonNegative);
    cfg.eval_samples_per_class = s.count("eval_samples_per_class", cfg.eval_samples_per_class, 1);
    s.finish();
  }
  if (root.has("features")) {
    Section s = root.child("features");
    FeatureSource f;
    if (!s.has("path")) s.fail("path", "is required");
    f.path = resolve(base_dir, s.text("path", ""));
    f.format = corpus::feature_format_from_string(s.text("format", "binary"));
    if (s.has("prompts")) f.prompts = resolve(base_dir, s.text("prompts", ""));
    if (s.has("eval_path")) f.eval_path = resolve(base_dir, s.text("eval_path", ""));
    s.finish();
    cfg.features = f;
  }

  cfg.forget_classes = root.ids("forget_classes", cfg.forget_classes);

  if (root.has("model")) {
    Section s = root.child("model");
    cfg.embed_dim = s.count("embed_dim", cfg.embed_dim, 2);
    cfg.hidden_dim = s.count("hidden_dim", cfg.hidden_dim);
    cfg.init_scale = s.number("init_scale", cfg.init_scale, Bound::kPositive);
    s.finish();
  }
  if (root.has("geometry")) {
    Section s = root.child("geometry");
    cfg.geometry.curvature = s.number("curvature", cfg.geometry.curvature, Bound::kPositive);
    cfg.geometry.aperture_k = s.number("aperture_k", cfg.geometry.aperture_k, Bound::kPositive);
    cfg.geometry.acosh_eps = s.number("acosh_eps", cfg.geometry.acosh_eps, Bound::kPositive);
    const std::string norm = s.text("norm_reg", "geodesic");
    if (norm == "geodesic") {
      cfg.norm_reg = objectives::NormRegMode::kGeodesic;
    } else if (norm == "lorentzian") {
      cfg.norm_reg = objectives::NormRegMode::kLorentzian;
    } else {
      s.fail("norm_reg", "expected geodesic or lorentzian");
    }
    s.finish();
  }
  if (root.has("unlearn")) {
    Section s = root.child("unlearn");
    auto& hp = cfg.hp;
    hp.alpha = s.number("alpha", hp.alpha, Bound::kNonNegative);
    hp.beta = s.number("beta", hp.beta, Bound::kNonNegative);
    hp.gamma = s.number("gamma", hp.gamma, Bound::kNonNegative);
    hp.epsilon = s.number("epsilon", hp.epsilon, Bound::kNonNegative);
    hp.omega_r = s.number("omega_r", hp.omega_r, Bound::kNonNegative);
    hp.omega_f = s.number("omega_f", hp.omega_f, Bound::kNonNegative);
    hp.lambda_reg = s.number("lambda_reg", hp.lambda_reg, Bound::kNonNegative);
    hp.tau = s.number("tau", hp.tau, Bound::kPositive);
    s.finish();
  }
  if (root.has("pretrain_optim")) cfg.pretrain_optim = read_optim(root.child("pretrain_optim"), cfg.pretrain_optim);
  if (root.has("unlearn_optim")) cfg.unlearn_optim = read_optim(root.child("unlearn_optim"), cfg.unlearn_optim);
  cfg.pretrain_entailment_weight =
      root.number("pretrain_entailment_weight", cfg.pretrain_entailment_weight, Bound::kNonNegative);

  if (root.has("probe")) {
    Section s = root.child("probe");
    cfg.probe_enabled = s.boolean("enabled", cfg.probe_enabled);
    cfg.probe.iterations = s.count("iterations", cfg.probe.iterations, 1);
    cfg.probe.lr = s.number("lr", cfg.probe.lr, Bound::kPositive);
    cfg.probe.train_fraction = s.number("train_fraction", cfg.probe.train_fraction, Bound::kUnitOpen);
    s.finish();
  }
  if (root.has("export")) {
    Section s = root.child("export");
    cfg.export_spec.classes = s.ids("classes", cfg.export_spec.classes);
    cfg.export_spec.samples_per_class = s.count("samples_per_class", cfg.export_spec.samples_per_class, 1);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(cfg.mode));
  j["seed"] = cfg.seed;
  if (cfg.features) {
    nlohmann::ordered_json f;
    f["path"] = cfg.features->path.string();
    f["format"] = format_name(cfg.features->format);
    if (cfg.features->prompts) f["prompts"] = cfg.features->prompts->string();
    if (cfg.features->eval_path) f["eval_path"] = cfg.features->eval_path->string();
    j["features"] = f;
  } else {
    nlohmann::ordered_json c;
    c["superclasses"] = cfg.corpus.superclasses;
    c["classes_per_superclass"] = cfg.corpus.classes_per_superclass;
    c["dim"] = cfg.corpus.dim;
    c["samples_per_class"] = cfg.corpus.samples_per_class;
    c["noise"] = cfg.corpus.noise;
    c["modality_offset"] = cfg.corpus.modality_offset;
    c["class_spread"] = cfg.corpus.class_spread;
    c["eval_samples_per_class"] = cfg.eval_samples_per_class;
    j["corpus"] = c;
  }
  j["forget_classes"] = cfg.forget_classes;
  j["model"] = {{"embed_dim", cfg.embed_dim}, {"hidden_dim", cfg.hidden_dim}, {"init_scale", cfg.init_scale}};
  nlohmann::ordered_json g;
  g["curvature"] = cfg.geometry.curvature;
  g["aperture_k"] = cfg.geometry.aperture_k;
  g["acosh_eps"] = cfg.geometry.acosh_eps;
  g["norm_reg"] = cfg.norm_reg == objectives::NormRegMode::kGeodesic ? "geodesic" : "lorentzian";
  j["geometry"] = g;
  nlohmann::ordered_json u;
  u["alpha"] = cfg.hp.alpha;
  u["beta"] = cfg.hp.beta;
  u["gamma"] = cfg.hp.gamma;
  u["epsilon"] = cfg.hp.epsilon;
  u["omega_r"] = cfg.hp.omega_r;
  u["omega_f"] = cfg.hp.omega_f;
  u["lambda_reg"] = cfg.hp.lambda_reg;
  u["tau"] = cfg.hp.tau;
  j["unlearn"] = u;
  j["pretrain_optim"] = optim_json(cfg.pretrain_optim);
  j["unlearn_optim"] = optim_json(cfg.unlearn_optim);
  j["pretrain_entailment_weight"] = cfg.pretrain_entailment_weight;
  nlohmann::ordered_json p;
  p["enabled"] = cfg.probe_enabled;
  p["iterations"] = cfg.probe.iterations;
  p["lr"] = cfg.probe.lr;
  p["train_fraction"] = cfg.probe.train_fraction;
  j["probe"] = p;
  j["export"] = {{"classes", cfg.export_spec.classes}, {"samples_per_class", cfg.export_spec.samples_per_class}};
  return j;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"alpha",  "beta",       "gamma", "epsilon",  "omega_r",
                                             "omega_f", "lambda_reg", "tau",   "unlearn_lr"};
  return axes;
}

RunConfig with_axis_value(const RunConfig& config, std::string_view axis, double value) {
  RunConfig out = config;
  auto& hp = out.hp;
  if (axis == "alpha") {
    hp.alpha = value;
  } else if (axis == "beta") {
    hp.beta = value;
  } else if (axis == "gamma") {
    hp.gamma = value;
  } else if (axis == "epsilon") {
    hp.epsilon = value;
  } else if (axis == "omega_r") {
    hp.omega_r = value;
  } else if (axis == "omega_f") {
    hp.omega_f = value;
  } else if (axis == "lambda_reg") {
    hp.lambda_reg = value;
  } else if (axis == "tau") {
    hp.tau = value;
  } else if (axis == "unlearn_lr") {
    out.unlearn_optim.lr = value;
  } else {
    std::string known;
    for (const auto& a : sweep_axes()) known += (known.empty() ? "" : ", ") + a;
    throw ValidationError("--axis: unknown hyperparameter '" + std::string(axis) + "' (known: " + known + ")");
  }
  out.validate();
  return out;
}

}  // namespace hac::cli
