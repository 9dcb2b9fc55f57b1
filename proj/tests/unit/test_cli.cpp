#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hac/cli/commands.hpp"
#include "hac/cli/config.hpp"
#include "hac/errors.hpp"
#include "hac/geometry/lorentz.hpp"
#include "hac/io.hpp"
#include "hac/train/checkpoint.hpp"

using namespace hac;
using namespace hac::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = fs::path(HAC_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hac_lab_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json minimal() {
  std::ifstream is(kConfigs / "minimal_4class.json");
  return json::parse(is);
}

json minimal_hyperbolic() {
  json j = minimal();
  j["mode"] = "meru-hac-reg";
  j["unlearn"] = {{"alpha", 0.5}, {"beta", 0.5}, {"gamma", 0.5}, {"epsilon", 0.03},
                  {"omega_r", 0.2}, {"omega_f", 1.0}, {"lambda_reg", 0.1}, {"tau", 0.01}};
  return j;
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
  fs::path dir;  // last line of stdout
};

Outcome run(CommandLine cmd) {
  std::ostringstream out, err;
  Outcome o{run_command(cmd, out, err), out.str(), err.str(), {}};
  std::string s = o.out;
  while (!s.empty() && s.back() == '\n') s.pop_back();
  o.dir = s.substr(s.find_last_of('\n') + 1);
  return o;
}

CommandLine command(const std::string& verb, const fs::path& config, const fs::path& out) {
  CommandLine c;
  c.verb = verb;
  c.config = config;
  c.out = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream b;
  b << is.rdbuf();
  return b.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> row;
    for (auto f : io::split(line, ',')) row.emplace_back(f);
    rows.push_back(row);
  }
  return rows;
}

std::string rejection(const json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config validation names the field") {
  json j = minimal();
  j["unlearn"]["tau"] = 0.0;
  CHECK(rejection(j).find("unlearn.tau") != std::string::npos);

  j = minimal();
  j["unlearn"]["beta"] = -0.5;
  CHECK(rejection(j).find("unlearn.beta") != std::string::npos);

  j = minimal();
  j["forget_classes"] = {0, 1, 2, 3};
  CHECK(rejection(j).find("forget") != std::string::npos);

  j = minimal();
  j["unlearn"]["omega_f"] = 1.0;
  CHECK(rejection(j).find("omega_f") != std::string::npos);

  j = minimal_hyperbolic();
  j["mode"] = "meru-hac";
  CHECK(rejection(j).find("lambda_reg") != std::string::npos);

  j = minimal();
  j["unlearn"]["taux"] = 0.1;
  CHECK(rejection(j).find("unlearn.taux: unknown key") != std::string::npos);

  j = minimal();
  j["mode"] = "clip-hac";
  CHECK_FALSE(rejection(j).empty());

  CHECK(rejection(minimal()).empty());
}

TEST_CASE("config dump is canonical") {
  auto a = parse_config(minimal());
  auto b = parse_config(json::parse(config_json(a).dump()));
  CHECK(config_json(a).dump() == config_json(b).dump());
  auto swept = with_axis_value(a, "beta", 0.25);
  CHECK(swept.hp.beta == 0.25);
  CHECK_THROWS_AS(with_axis_value(a, "betta", 0.25), ValidationError);
}

TEST_CASE("exit codes for bad inputs") {
  const fs::path dir = scratch("exit_codes");
  CHECK(run(command("pretrain", dir / "missing.json", dir)).code == kExitIo);

  json bad = minimal();
  bad["unlearn"]["tau"] = -1;
  auto o = run(command("pretrain", write_config(dir, bad), dir));
  CHECK(o.code == kExitValidation);
  CHECK(o.err.find("unlearn.tau") != std::string::npos);

  auto sweep = command("sweep", write_config(dir, minimal(), "ok.json"), dir);
  sweep.axis = "nonsense";
  sweep.values = "0.1";
  CHECK(run(sweep).code == kExitValidation);

  auto ev = command("eval", dir / "ok.json", dir);
  ev.checkpoint = dir / "nope.bin";
  CHECK(run(ev).code == kExitIo);
}

TEST_CASE("pretrain, unlearn, sweep and export") {
  const fs::path dir = scratch("pipeline");
  const fs::path out = dir / "fresh" / "runs";
  const fs::path cfg_path = write_config(dir, minimal_hyperbolic());

  auto pre = run(command("pretrain", cfg_path, out));
  REQUIRE(pre.code == kExitOk);
  for (auto f : {"config.json", "loss_log.csv", "checkpoint.bin", "report.json", "confusion.csv"}) {
    CHECK(fs::exists(pre.dir / f));
  }
  auto log = read_csv(pre.dir / "loss_log.csv");
  CHECK(log.front() == std::vector<std::string>{"iteration", "lr", "loss", "grad_norm"});
  REQUIRE(log.size() == 501);
  std::vector<double> windows;
  for (std::size_t w = 0; w < 5; ++w) {
    double s = 0;
    for (std::size_t i = 0; i < 100; ++i) s += io::parse_double(log[1 + 100 * w + i][2]);
    windows.push_back(s / 100);
  }
  CHECK(windows.back() < windows.front());
  for (std::size_t w = 1; w < windows.size(); ++w) CHECK(windows[w] < windows[0]);

  SUBCASE("pretraining is reproducible") {
    auto again = run(command("pretrain", cfg_path, dir / "second"));
    REQUIRE(again.code == kExitOk);
    CHECK(again.dir.filename() == pre.dir.filename());
    for (auto f : {"loss_log.csv", "checkpoint.bin", "report.json", "confusion.csv", "config.json"}) {
      CHECK(slurp(again.dir / f) == slurp(pre.dir / f));
    }
  }

  SUBCASE("unlearn log columns recompose the total") {
    auto un = command("unlearn", cfg_path, out);
    un.checkpoint = pre.dir / "checkpoint.bin";
    auto o = run(un);
    REQUIRE(o.code == kExitOk);
    for (auto f : {"unlearn_log.csv", "checkpoint.bin", "report_before.json", "report_after.json",
                   "confusion_before.csv", "confusion_after.csv", "audit.json"}) {
      CHECK(fs::exists(o.dir / f));
    }
    auto rows = read_csv(o.dir / "unlearn_log.csv");
    CHECK(rows.front() == std::vector<std::string>{"iteration", "lr", "retain", "neg", "pos", "perf", "r_ent",
                                                   "f_ent", "norm_reg", "total", "grad_norm"});
    const auto cfg = load_config(cfg_path);
    const auto& hp = cfg.hp;
    REQUIRE(rows.size() == 201);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      auto v = [&](std::size_t k) { return io::parse_double(rows[r][k]); };
      const double sum = v(2) + hp.epsilon * (hp.alpha * v(3) + hp.beta * v(4) + hp.gamma * v(5)) +
                         hp.omega_r * v(6) + hp.omega_f * v(7) + hp.lambda_reg * v(8);
      CHECK(std::fabs(sum - v(9)) <= 1e-9);
    }
    auto after = json::parse(slurp(o.dir / "report_after.json"));
    CHECK(after.contains("audit"));
    CHECK(after["r_acc"].is_number());

    auto sw = command("sweep", cfg_path, out);
    sw.checkpoint = pre.dir / "checkpoint.bin";
    sw.axis = "beta";
    sw.values = "0.5";
    auto s = run(sw);
    REQUIRE(s.code == kExitOk);
    const fs::path sub = s.dir / "value-0.5";
    for (auto f : {"unlearn_log.csv", "checkpoint.bin", "report_before.json", "report_after.json", "audit.json",
                   "confusion_after.csv", "config.json"}) {
      CHECK(slurp(sub / f) == slurp(o.dir / f));
    }
    auto table = read_csv(s.dir / "sweep.csv");
    REQUIRE(table.size() == 2);
    CHECK(table[0][0] == "beta");
    CHECK(io::parse_double(table[1][1]) == after["r_acc"].get<double>());
  }

  SUBCASE("checkpoint and config must agree") {
    json euclid = minimal();
    auto un = command("unlearn", write_config(dir, euclid, "euclid.json"), out);
    un.checkpoint = pre.dir / "checkpoint.bin";
    auto o = run(un);
    CHECK(o.code == kExitValidation);
    CHECK(o.err.find("mismatch") != std::string::npos);
  }

  SUBCASE("hyperbolic export round trips") {
    auto ex = command("export-embeddings", cfg_path, out);
    ex.checkpoint = pre.dir / "checkpoint.bin";
    auto o = run(ex);
    REQUIRE(o.code == kExitOk);
    auto rows = read_csv(o.dir / "embeddings.csv");
    CHECK(rows.front().back() == "time");
    const auto model = train::read_checkpoint(pre.dir / "checkpoint.bin");
    const auto cfg = load_config(cfg_path);
    const auto data = prepare_data(cfg);
    std::vector<corpus::CorpusSample> picked;
    std::map<corpus::ClassId, std::size_t> taken;
    for (const auto& s : data.eval) {
      if (taken[s.class_id]++ < cfg.export_spec.samples_per_class) picked.push_back(s);
    }
    auto batch = corpus::stack_samples(picked);
    auto img = train::embed_images(model, batch.image);
    auto txt = train::embed_texts(model, batch.text);
    REQUIRE(rows.size() == 1 + 2 * picked.size());
    const std::size_t d = model.embed_dim();
    for (std::size_t i = 0; i < picked.size(); ++i) {
      for (int m = 0; m < 2; ++m) {
        const auto& row = rows[1 + 2 * i + m];
        CHECK(row[0] == (m == 0 ? "image" : "text"));
        CHECK(io::parse_u64(row[1]) == picked[i].class_id);
        const auto& emb = m == 0 ? img : txt;
        geometry::LorentzPoint p;
        p.curvature = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double v = io::parse_double(row[2 + j]);
          CHECK(std::fabs(v - emb.at(i, j)) <= 1e-15);
          p.space.push_back(v);
        }
        p.time = io::parse_double(row[2 + d]);
        CHECK(geometry::manifold_residual(p) <= 1e-9);
      }
    }
  }
}

TEST_CASE("export covers every selected group") {
  const fs::path dir = scratch("export_groups");
  json j = minimal();
  j["corpus"]["superclasses"] = 2;
  j["corpus"]["classes_per_superclass"] = 3;
  j["pretrain_optim"]["iterations"] = 20;
  j["export"] = {{"classes", {0, 1, 2, 3, 4, 5}}, {"samples_per_class", 3}};
  const auto cfg_path = write_config(dir, j);
  auto pre = run(command("pretrain", cfg_path, dir));
  REQUIRE(pre.code == kExitOk);
  auto ex = command("export-embeddings", cfg_path, dir);
  ex.checkpoint = pre.dir / "checkpoint.bin";
  auto o = run(ex);
  REQUIRE(o.code == kExitOk);
  auto rows = read_csv(o.dir / "embeddings.csv");
  std::set<std::pair<std::string, std::string>> groups;
  for (std::size_t r = 1; r < rows.size(); ++r) groups.insert({rows[r][0], rows[r][1]});
  CHECK(groups.size() == 12);
  CHECK(rows.size() == 1 + 36);

  j["export"]["samples_per_class"] = 0;
  auto empty = command("export-embeddings", write_config(dir, j, "empty.json"), dir);
  empty.checkpoint = pre.dir / "checkpoint.bin";
  CHECK(run(empty).code == kExitValidation);
}

TEST_CASE("gradient suite") {
  RunConfig cfg;
  auto rows = gradient_suite(cfg, 3);
  std::set<std::string> names;
  for (const auto& r : rows) {
    CHECK(r.passed);
    names.insert(r.name);
  }
  CHECK(rows.size() == 23);
  CHECK(names.size() == rows.size());
  auto faulty = gradient_suite(cfg, 3, true);
  CHECK_FALSE(faulty.back().passed);
}

TEST_CASE("grad-check binary exit codes") {
  const std::string bin = HAC_LAB_BIN;
  const std::string sink = " > " + (fs::temp_directory_path() / "hac_lab_gc.txt").string() + " 2>&1";
  const int ok = std::system((bin + " grad-check --points 2" + sink).c_str());
  const int bad = std::system((bin + " grad-check --points 2 --inject-fault" + sink).c_str());
  REQUIRE(WIFEXITED(ok));
  REQUIRE(WIFEXITED(bad));
  CHECK(WEXITSTATUS(ok) == 0);
  CHECK(WEXITSTATUS(bad) == 2);
  const int usage = std::system((bin + " frobnicate" + sink).c_str());
  CHECK(WEXITSTATUS(usage) == 1);
}
