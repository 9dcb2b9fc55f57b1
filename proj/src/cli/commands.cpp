#include "hac/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hac/ad/grad_check.hpp"
#include "hac/errors.hpp"
#include "hac/eval/report_io.hpp"
#include "hac/geometry/lorentz.hpp"
#include "hac/io.hpp"
#include "hac/train/checkpoint.hpp"

namespace hac::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalSeedOffset = 1000;

std::string csv_number(const std::optional<double>& v) { return v ? io::format_double(*v) : "NA"; }

std::string read_bytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

fs::path make_run_dir(const CommandLine& cmd, const RunConfig& cfg, const std::string& extra) {
  std::string key = cmd.verb + "\n" + config_json(cfg).dump() + "\n" + extra;
  if (cmd.checkpoint) key += "\n" + io::hex64(io::fnv1a(read_bytes(*cmd.checkpoint)));
  const fs::path dir = cmd.out / (cmd.verb + "-" + io::hex64(io::fnv1a(key)));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  eval::write_text_file(dir / "config.json", config_json(cfg).dump(2) + "\n");
  return dir;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { eval::write_text_file(path, j.dump(2) + "\n"); }

train::ModelParams load_or_pretrain(const CommandLine& cmd, const RunConfig& cfg, const RunData& data,
                                    std::ostream& out) {
  if (cmd.checkpoint) {
    train::ModelParams model = train::read_checkpoint(*cmd.checkpoint);
    check_compatible(cfg, data, model);
    return model;
  }
  out << "no --checkpoint given; pretraining from the config first\n";
  return run_pretrain(cfg, data).model;
}

struct UnlearnArtifacts {
  eval::EvalReport before;
  eval::EvalReport after;
};

UnlearnArtifacts unlearn_into(const fs::path& dir, const RunConfig& cfg, const RunData& data,
                              const train::ModelParams& original) {
  UnlearnArtifacts a;
  a.before = run_eval(cfg, data, original);
  const train::UnlearnResult result = run_unlearn(cfg, data, original);
  a.after = run_eval(cfg, data, result.model);
  a.after.audit = run_audit(data, original, result.model);
  train::write_checkpoint(dir / "checkpoint.bin", result.model);
  eval::write_text_file(dir / "unlearn_log.csv", unlearn_log_csv(result.log));
  write_json(dir / "report_before.json", eval::report_json(a.before, cfg.probe_enabled));
  write_json(dir / "report_after.json", eval::report_json(a.after, cfg.probe_enabled));
  eval::write_text_file(dir / "confusion_before.csv", eval::confusion_csv(a.before.confusion));
  eval::write_text_file(dir / "confusion_after.csv", eval::confusion_csv(a.after.confusion));
  write_json(dir / "audit.json", eval::audit_json(*a.after.audit));
  return a;
}

void print_accuracy(std::ostream& out, const char* label, const eval::EvalReport& r) {
  out << label << " R-acc " << csv_number(r.r_acc) << "  F-acc " << csv_number(r.f_acc);
  if (r.probe_r_acc || r.probe_f_acc) {
    out << "  probe R " << csv_number(r.probe_r_acc) << "  probe F " << csv_number(r.probe_f_acc);
  }
  out << '\n';
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  for (std::string_view item : io::split(text, ',')) {
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    try {
      values.push_back(io::parse_double(item));
    } catch (const Error&) {
      throw ValidationError("--values: '" + std::string(item) + "' is not a number");
    }
  }
  if (values.empty()) throw ValidationError("--values: no values given");
  std::sort(values.begin(), values.end());
  if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
    throw ValidationError("--values: duplicate value");
  }
  return values;
}

std::size_t sweep_threads(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HAC_LAB_THREADS")) {
    try {
      cap = std::max<std::uint64_t>(1, io::parse_u64(env));
    } catch (const Error&) {
      throw ValidationError("HAC_LAB_THREADS must be a positive integer");
    }
  }
  return std::min(cap, jobs);
}

int cmd_pretrain(const CommandLine& cmd, const RunConfig& cfg, std::ostream& out) {
  const RunData data = prepare_data(cfg);
  const fs::path dir = make_run_dir(cmd, cfg, "");
  const train::PretrainResult result = run_pretrain(cfg, data);
  const eval::EvalReport report = run_eval(cfg, data, result.model);
  train::write_checkpoint(dir / "checkpoint.bin", result.model);
  eval::write_text_file(dir / "loss_log.csv", pretrain_log_csv(result.log));
  write_json(dir / "report.json", eval::report_json(report, cfg.probe_enabled));
  eval::write_text_file(dir / "confusion.csv", eval::confusion_csv(report.confusion));
  print_accuracy(out, "pretrained", report);
  out << dir.string() << '\n';
  return kExitOk;
}

int cmd_unlearn(const CommandLine& cmd, const RunConfig& cfg, std::ostream& out) {
  const RunData data = prepare_data(cfg);
  const train::ModelParams original = load_or_pretrain(cmd, cfg, data, out);
  const fs::path dir = make_run_dir(cmd, cfg, "");
  const UnlearnArtifacts a = unlearn_into(dir, cfg, data, original);
  print_accuracy(out, "before", a.before);
  print_accuracy(out, "after ", a.after);
  out << "audit image-side " << io::format_double(a.after.audit->image_side_fraction) << "  retain drift "
      << io::format_double(a.after.audit->retain_drift) << "  forget drift "
      << io::format_double(a.after.audit->forget_drift) << '\n';
  out << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommandLine& cmd, const RunConfig& cfg, std::ostream& out) {
  if (!cmd.checkpoint) throw ValidationError("eval: --checkpoint is required");
  const RunData data = prepare_data(cfg);
  const train::ModelParams model = load_or_pretrain(cmd, cfg, data, out);
  const fs::path dir = make_run_dir(cmd, cfg, "");
  const eval::EvalReport report = run_eval(cfg, data, model);
  write_json(dir / "report.json", eval::report_json(report, cfg.probe_enabled));
  eval::write_text_file(dir / "confusion.csv", eval::confusion_csv(report.confusion));
  print_accuracy(out, "eval", report);
  out << dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommandLine& cmd, const RunConfig& cfg, std::ostream& out) {
  if (cmd.axis.empty()) throw ValidationError("sweep: --axis is required");
  const std::vector<double> values = parse_values(cmd.values);
  std::vector<RunConfig> configs;
  for (double v : values) configs.push_back(with_axis_value(cfg, cmd.axis, v));

  const RunData data = prepare_data(cfg);
  const train::ModelParams original = load_or_pretrain(cmd, cfg, data, out);
  std::string extra = "axis=" + cmd.axis;
  for (double v : values) extra += "," + io::format_double(v);
  const fs::path dir = make_run_dir(cmd, cfg, extra);

  std::vector<std::optional<UnlearnArtifacts>> results(values.size());
  std::vector<std::exception_ptr> failures(values.size());
  std::size_t next = 0;
  std::mutex lock;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> guard(lock);
        if (next >= values.size()) return;
        k = next++;
      }
      try {
        const fs::path sub = dir / ("value-" + io::format_double(values[k]));
        fs::create_directories(sub);
        eval::write_text_file(sub / "config.json", config_json(configs[k]).dump(2) + "\n");
        results[k] = unlearn_into(sub, configs[k], data, original);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = sweep_threads(values.size());
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::ostringstream csv;
  csv << cmd.axis << ",r_acc,f_acc,probe_r_acc,probe_f_acc,audit_image_side,retain_drift,forget_drift\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    const eval::EvalReport& r = results[k]->after;
    csv << io::format_double(values[k]) << ',' << csv_number(r.r_acc) << ',' << csv_number(r.f_acc) << ','
        << csv_number(r.probe_r_acc) << ',' << csv_number(r.probe_f_acc) << ','
        << io::format_double(r.audit->image_side_fraction) << ',' << io::format_double(r.audit->retain_drift) << ','
        << io::format_double(r.audit->forget_drift) << '\n';
  }
  eval::write_text_file(dir / "sweep.csv", csv.str());
  out << csv.str() << dir.string() << '\n';
  return kExitOk;
}

int cmd_export(const CommandLine& cmd, const RunConfig& cfg, std::ostream& out) {
  if (!cmd.checkpoint) throw ValidationError("export-embeddings: --checkpoint is required");
  const RunData data = prepare_data(cfg);
  const train::ModelParams model = load_or_pretrain(cmd, cfg, data, out);

  std::vector<corpus::CorpusSample> picked;
  std::map<corpus::ClassId, std::size_t> taken;
  const auto& wanted = cfg.export_spec.classes;
  for (const corpus::CorpusSample& s : data.eval) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), s.class_id) == wanted.end()) continue;
    if (taken[s.class_id] >= cfg.export_spec.samples_per_class) continue;
    ++taken[s.class_id];
    picked.push_back(s);
  }
  if (picked.empty()) throw ValidationError("export: the sample spec selects no samples");

  const corpus::FeatureBatch batch = corpus::stack_samples(picked);
  const ad::Tensor images = train::embed_images(model, batch.image);
  const ad::Tensor texts = train::embed_texts(model, batch.text);
  const bool hyperbolic = model.kind == objectives::SimilarityKind::kHyperbolicNegDistance;
  const std::size_t d = model.embed_dim();

  std::ostringstream csv;
  csv << "modality,class_id";
  for (std::size_t j = 0; j < d; ++j) csv << ",x" << j;
  if (hyperbolic) csv << ",time";
  csv << '\n';
  auto emit = [&](const char* modality, const ad::Tensor& emb, std::size_t i, corpus::ClassId id) {
    csv << modality << ',' << id;
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = emb.at(i, j);
      csv << ',' << io::format_double(row[j]);
    }
    if (hyperbolic) {
      csv << ',' << io::format_double(geometry::LorentzPoint::from_space(row, model.geometry.curvature).time);
    }
    csv << '\n';
  };
  for (std::size_t i = 0; i < picked.size(); ++i) {
    emit("image", images, i, picked[i].class_id);
    emit("text", texts, i, picked[i].class_id);
  }
  const fs::path dir = make_run_dir(cmd, cfg, "");
  eval::write_text_file(dir / "embeddings.csv", csv.str());
  out << "exported " << 2 * picked.size() << " embeddings\n" << dir.string() << '\n';
  return kExitOk;
}

int cmd_grad_check(const CommandLine& cmd, const RunConfig& cfg, std::ostream& out) {
  const auto rows = gradient_suite(cfg, cmd.grad_points, cmd.inject_fault);
  bool ok = true;
  out << std::left << std::setw(44) << "loss" << "max_rel_error  status\n";
  for (const GradCheckRow& r : rows) {
    out << std::left << std::setw(44) << r.name << std::setw(15) << std::scientific << std::setprecision(3)
        << r.max_relative_error << (r.passed ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed;
  }
  out << std::defaultfloat;
  out << (ok ? "all losses within " : "gradient check failed; tolerance ") << kGradCheckTolerance << '\n';
  return ok ? kExitOk : kExitNumerical;
}

// ---- gradient suite -------------------------------------------------------

using objectives::EmbeddingBatch;
using objectives::SimilarityKind;

struct SuiteCase {
  std::string name;
  SimilarityKind kind;
  std::function<ad::Var(const EmbeddingBatch&)> loss;
};

EmbeddingBatch suite_batch(const std::vector<ad::Var>& in, SimilarityKind kind, const RunConfig& cfg,
                           std::size_t pairs_per_side) {
  EmbeddingBatch b;
  b.kind = kind;
  b.geometry = cfg.geometry;
  if (kind == SimilarityKind::kHyperbolicNegDistance) {
    b.image = geometry::exp_map_origin(in[0], cfg.geometry.curvature);
    b.text = geometry::exp_map_origin(in[1], cfg.geometry.curvature);
  } else {
    b.image = in[0];
    b.text = in[1];
  }
  b.forget_mask.assign(2 * pairs_per_side, false);
  for (std::size_t i = pairs_per_side; i < 2 * pairs_per_side; ++i) b.forget_mask[i] = true;
  return b;
}

std::vector<SuiteCase> suite_cases(const RunConfig& cfg) {
  objectives::UnlearnHyperParams hp;
  hp.alpha = 0.5;
  hp.beta = 0.5;
  hp.gamma = 0.5;
  hp.epsilon = 1.0;
  hp.omega_r = 0.2;
  hp.omega_f = 1.0;
  hp.lambda_reg = 0.1;
  hp.tau = cfg.hp.tau;
  const double tau = cfg.hp.tau;
  const double c = cfg.geometry.curvature;
  const double ent = cfg.pretrain_entailment_weight > 0.0 ? cfg.pretrain_entailment_weight : 0.2;

  std::vector<SuiteCase> cases;
  for (SimilarityKind kind : {SimilarityKind::kEuclideanCosine, SimilarityKind::kHyperbolicNegDistance}) {
    const std::string tag = kind == SimilarityKind::kEuclideanCosine ? " [cosine]" : " [lorentz]";
    cases.push_back({"contrastive (clip/meru)" + tag, kind,
                     [=](const EmbeddingBatch& b) { return objectives::clip_contrastive_loss(b, tau); }});
    cases.push_back({"info_nce" + tag, kind, [=](const EmbeddingBatch& b) {
                       std::vector<std::size_t> positive(b.size());
                       for (std::size_t i = 0; i < b.size(); ++i) positive[i] = i ^ 1u;
                       return objectives::info_nce_loss(b.image, positive, tau, b.kind, c);
                     }});
    cases.push_back({"retain" + tag, kind, [=](const EmbeddingBatch& b) { return objectives::retain_loss(b, tau); }});
    cases.push_back({"negative_alignment" + tag, kind, [=](const EmbeddingBatch& b) {
                       return objectives::negative_alignment_loss(b.slice(b.forget_ids()), tau);
                     }});
    cases.push_back({"positive_alignment" + tag, kind, [=](const EmbeddingBatch& b) {
                       return objectives::positive_alignment_loss(b.slice(b.forget_ids()), tau);
                     }});
    cases.push_back({"performance_preserving" + tag, kind,
                     [=](const EmbeddingBatch& b) { return objectives::performance_preserving_loss(b, tau); }});
    cases.push_back({"forget" + tag, kind, [=](const EmbeddingBatch& b) { return objectives::forget_loss(b, hp); }});
    cases.push_back({"ac_total" + tag, kind, [=](const EmbeddingBatch& b) { return objectives::ac_total(b, hp); }});
  }
  const SimilarityKind h = SimilarityKind::kHyperbolicNegDistance;
  cases.push_back({"entailment (meru pretraining)", h,
                   [=](const EmbeddingBatch& b) { return objectives::pretraining_loss(b, tau, ent); }});
  cases.push_back({"retain_entailment", h, [=](const EmbeddingBatch& b) {
                     return objectives::retain_entailment_loss(b.slice(b.retain_ids()));
                   }});
  cases.push_back({"forget_entailment", h, [=](const EmbeddingBatch& b) {
                     return objectives::forget_entailment_loss(b.slice(b.forget_ids()));
                   }});
  cases.push_back({"hac_total", h, [=](const EmbeddingBatch& b) { return objectives::hac_total(b, hp); }});
  cases.push_back({"norm_regularization [geodesic]", h, [=](const EmbeddingBatch& b) {
                     return objectives::norm_regularization(b.slice(b.forget_ids()), objectives::NormRegMode::kGeodesic);
                   }});
  cases.push_back({"norm_regularization [lorentzian]", h, [=](const EmbeddingBatch& b) {
                     return objectives::norm_regularization(b.slice(b.forget_ids()),
                                                            objectives::NormRegMode::kLorentzian);
                   }});
  cases.push_back({"hac_reg_total", h, [=](const EmbeddingBatch& b) { return objectives::hac_reg_total(b, hp); }});
  return cases;
}

}  // namespace

std::vector<GradCheckRow> gradient_suite(const RunConfig& cfg, std::size_t points, bool inject_fault) {
  if (points == 0) throw ValidationError("grad-check: need at least one point");
  constexpr std::size_t kPairsPerSide = 3;
  constexpr std::size_t kDim = 4;
  constexpr double kStep = 1e-6;

  std::vector<std::vector<ad::Tensor>> inputs;
  for (std::size_t p = 0; p < points; ++p) {
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(p), std::uint64_t{0x67726164}};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 0.6);
    ad::Tensor image = ad::Tensor::zeros({2 * kPairsPerSide, kDim});
    ad::Tensor text = ad::Tensor::zeros({2 * kPairsPerSide, kDim});
    for (double& v : text.values()) v = normal(rng);
    if (p % 2 == 0) {
      for (double& v : image.values()) v = normal(rng);
    } else {
      // Images just beyond their caption along the same ray: inside the
      // cone, so the entailment hinges are active.
      for (std::size_t k = 0; k < text.size(); ++k) {
        text[k] *= 0.3;
        image[k] = 2.0 * text[k] + 0.05 * normal(rng);
      }
    }
    inputs.push_back({std::move(image), std::move(text)});
  }

  std::vector<GradCheckRow> rows;
  for (const SuiteCase& sc : suite_cases(cfg)) {
    const ad::MultiFunction f = [&](ad::Graph&, const std::vector<ad::Var>& in) {
      return sc.loss(suite_batch(in, sc.kind, cfg, kPairsPerSide));
    };
    double worst = 0.0;
    for (const auto& point : inputs) worst = std::max(worst, ad::grad_check(f, point, kStep).max_relative_error);
    rows.push_back({sc.name, worst, worst < kGradCheckTolerance});
  }
  if (inject_fault) {
    const ad::MultiFunction f = [](ad::Graph&, const std::vector<ad::Var>& in) {
      auto wrong = ad::custom_unary(
          in[0], [](double x) { return std::sin(x); }, [](double x) { return 2.0 * std::cos(x); });
      return ad::sum(wrong);
    };
    double worst = 0.0;
    for (const auto& point : inputs) worst = std::max(worst, ad::grad_check(f, point, kStep).max_relative_error);
    rows.push_back({"injected fault (wrong derivative)", worst, worst < kGradCheckTolerance});
  }
  return rows;
}

RunData prepare_data(const RunConfig& cfg) {
  RunData data;
  if (cfg.features) {
    const auto& src = *cfg.features;
    corpus::Corpus c = corpus::ingest_external_features(src.path, src.format, src.prompts);
    data.taxonomy = std::move(c.taxonomy);
    data.train = std::move(c.samples);
    if (src.eval_path) {
      data.eval = corpus::read_features(*src.eval_path, src.format);
      for (std::size_t i = 0; i < data.eval.size(); ++i) {
        const auto& s = data.eval[i];
        if (s.class_id >= data.taxonomy.num_classes()) {
          throw ValidationError("features.eval_path: row " + std::to_string(i) + " has unknown class " +
                                std::to_string(s.class_id));
        }
        if (s.image.size() != data.taxonomy.dim) {
          throw ValidationError("features.eval_path: dimension mismatch in row " + std::to_string(i));
        }
      }
    } else {
      data.eval = data.train;
    }
    for (corpus::ClassId id : cfg.export_spec.classes) {
      if (id >= data.taxonomy.num_classes()) {
        throw ValidationError("export.classes: class " + std::to_string(id) + " does not exist");
      }
    }
  } else {
    corpus::CorpusShape shape = cfg.corpus;
    shape.seed = cfg.seed;
    corpus::Corpus c = corpus::generate_corpus(shape);
    data.taxonomy = std::move(c.taxonomy);
    data.train = std::move(c.samples);
    data.eval = corpus::draw_samples(data.taxonomy, cfg.eval_samples_per_class, shape.noise,
                                     cfg.seed + kEvalSeedOffset);
  }
  data.forget.classes = cfg.forget_classes;
  try {
    data.forget.validate(data.taxonomy);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("forget_classes: ") + e.what());
  }
  return data;
}

train::ModelParams initial_model(const RunConfig& cfg, const RunData& data) {
  train::ModelConfig mc;
  mc.input_dim = data.taxonomy.dim;
  mc.embed_dim = cfg.embed_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.init_scale = cfg.init_scale;
  mc.kind = cfg.kind();
  mc.geometry = cfg.geometry;
  mc.seed = cfg.seed;
  return train::ModelParams::init(mc);
}

train::PretrainResult run_pretrain(const RunConfig& cfg, const RunData& data) {
  train::PretrainConfig pc;
  pc.optim = cfg.pretrain_optim;
  pc.optim.seed = cfg.seed;
  pc.tau = cfg.hp.tau;
  pc.entailment_weight = cfg.pretrain_entailment_weight;
  return train::pretrain(initial_model(cfg, data), data.train, pc);
}

train::UnlearnResult run_unlearn(const RunConfig& cfg, const RunData& data, const train::ModelParams& original) {
  const auto [retain, forget] = corpus::split_forget(data.train, data.taxonomy, data.forget);
  train::UnlearnConfig uc;
  uc.optim = cfg.unlearn_optim;
  uc.optim.seed = cfg.seed;
  uc.hp = cfg.hp;
  uc.mode = cfg.unlearn_mode();
  uc.norm_mode = cfg.norm_reg;
  return train::unlearn(original, retain, forget, uc);
}

eval::EvalReport run_eval(const RunConfig& cfg, const RunData& data, const train::ModelParams& model) {
  eval::EvalOptions options;
  options.run_probe = cfg.probe_enabled;
  options.probe = cfg.probe;
  options.probe.seed = cfg.seed;
  return eval::evaluate(model, data.taxonomy, data.eval, data.forget, options);
}

objectives::AuditReport run_audit(const RunData& data, const train::ModelParams& original,
                                  const train::ModelParams& unlearned) {
  const auto [retain, forget] = corpus::split_forget(data.eval, data.taxonomy, data.forget);
  return eval::audit_models(original, unlearned, retain, forget);
}

void check_compatible(const RunConfig& cfg, const RunData& data, const train::ModelParams& model) {
  if (model.kind != cfg.kind()) {
    throw ValidationError("checkpoint/config mismatch: checkpoint is " + std::string(objectives::to_string(model.kind)) +
                          " but mode " + std::string(to_string(cfg.mode)) + " needs " +
                          std::string(objectives::to_string(cfg.kind())));
  }
  if (model.input_dim() != data.taxonomy.dim) {
    throw ValidationError("checkpoint/config mismatch: checkpoint input dimension " +
                          std::to_string(model.input_dim()) + ", corpus dimension " +
                          std::to_string(data.taxonomy.dim));
  }
  if (model.kind == objectives::SimilarityKind::kHyperbolicNegDistance &&
      model.geometry.curvature != cfg.geometry.curvature) {
    throw ValidationError("checkpoint/config mismatch: curvature differs");
  }
}

std::string pretrain_log_csv(const std::vector<train::PretrainLogRow>& log) {
  std::ostringstream os;
  os << "iteration,lr,loss,grad_norm\n";
  for (const auto& r : log) {
    os << r.iteration << ',' << io::format_double(r.lr) << ',' << io::format_double(r.loss) << ','
       << io::format_double(r.grad_norm) << '\n';
  }
  return os.str();
}

std::string unlearn_log_csv(const std::vector<train::UnlearnLogRow>& log) {
  std::ostringstream os;
  os << "iteration,lr,retain,neg,pos,perf,r_ent,f_ent,norm_reg,total,grad_norm\n";
  for (const auto& r : log) {
    os << r.iteration << ',' << io::format_double(r.lr) << ',' << io::format_double(r.retain) << ','
       << io::format_double(r.negative) << ',' << io::format_double(r.positive) << ','
       << io::format_double(r.performance) << ',' << io::format_double(r.retain_entailment) << ','
       << io::format_double(r.forget_entailment) << ',' << io::format_double(r.norm_reg) << ','
       << io::format_double(r.total) << ',' << io::format_double(r.grad_norm) << '\n';
  }
  return os.str();
}

int run_command(const CommandLine& cmd, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = cmd.config ? load_config(*cmd.config) : parse_config(nlohmann::json::object());
    if (cmd.seed) cfg.seed = *cmd.seed;
    if (cmd.verb == "pretrain") return cmd_pretrain(cmd, cfg, out);
    if (cmd.verb == "unlearn") return cmd_unlearn(cmd, cfg, out);
    if (cmd.verb == "eval") return cmd_eval(cmd, cfg, out);
    if (cmd.verb == "sweep") return cmd_sweep(cmd, cfg, out);
    if (cmd.verb == "export-embeddings") return cmd_export(cmd, cfg, out);
    if (cmd.verb == "grad-check") return cmd_grad_check(cmd, cfg, out);
    throw ValidationError("unknown command '" + cmd.verb + "'");
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"hac_lab: concept removal by alignment calibration in Euclidean and hyperbolic dual encoders"};
  app.require_subcommand(1, 1);
  CommandLine cmd;
  std::string config, checkpoint;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool needs_checkpoint) {
    sub->add_option("--config", config, "run configuration (JSON)");
    auto* ck = sub->add_option("--checkpoint", checkpoint, "model checkpoint");
    if (needs_checkpoint) ck->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", cmd.out, "root output directory")->capture_default_str();
  };
  common(app.add_subcommand("pretrain", "contrastive pretraining"), false);
  common(app.add_subcommand("unlearn", "unlearn the forget classes (pretrains first without --checkpoint)"), false);
  common(app.add_subcommand("eval", "zero-shot, confusion and probe report"), true);
  auto* sweep = app.add_subcommand("sweep", "one unlearning run per hyperparameter value");
  common(sweep, false);
  sweep->add_option("--axis", cmd.axis, "hyperparameter to vary")->required();
  sweep->add_option("--values", cmd.values, "comma-separated values")->required();
  common(app.add_subcommand("export-embeddings", "write image and text embeddings as CSV"), true);
  auto* gc = app.add_subcommand("grad-check", "finite-difference check of every loss");
  gc->add_option("--config", config, "run configuration (JSON)");
  gc->add_option("--seed", seed, "overrides the config seed");
  gc->add_option("--points", cmd.grad_points, "seeded points per loss")->capture_default_str();
  gc->add_flag("--inject-fault", cmd.inject_fault, "append a loss with a wrong derivative (checker self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  CLI::App* chosen = app.get_subcommands().front();
  cmd.verb = chosen->get_name();
  if (!config.empty()) cmd.config = config;
  if (!checkpoint.empty()) cmd.checkpoint = checkpoint;
  if (chosen->count("--seed") > 0) cmd.seed = seed;
  return run_command(cmd, std::cout, std::cerr);
}

}  // namespace hac::cli
