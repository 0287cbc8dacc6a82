#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "maada/dataset.hpp"
#include "maada/io.hpp"
#include "maada/rng.hpp"

using namespace maada;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

#ifndef MAADA_CLI_PATH
#define MAADA_CLI_PATH "./maada"
#endif

struct Workspace {
  fs::path dir;
  Workspace() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("maada_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const Workspace& log_dir() {
  static const Workspace logs;
  return logs;
}

int run_cli(const std::string& args, const std::string& log_name = "out.log") {
  const std::string log = log_dir().path(log_name);
  const std::string cmd = std::string(MAADA_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

// Metrics comparison with the wall clock removed; everything else must be
// byte-identical.
std::string metrics_without_wallclock(const std::string& path) {
  std::istringstream in(slurp(path));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json record = json::parse(line);
    record.erase("wall_clock_ms");
    out << record.dump() << "\n";
  }
  return out.str();
}

void write_config(const std::string& path, json overrides) {
  json config = {{"layer_sizes", {8}},  {"alpha", 0.1},        {"beta", 0.1},
                 {"weights",
                  {{"lambda_adv", 1.0}, {"lambda_cons", 1.0}, {"lambda_align", 0.1}}},
                 {"k", 5},              {"m", 1},
                 {"chart_refresh_every", 1}, {"learning_rate", 0.05},
                 {"epochs", 4},         {"batch_size", 16},
                 {"seed", 1},           {"norm_floor", 1e-12}};
  for (auto& [key, value] : overrides.items()) config[key] = value;
  std::ofstream(path) << config.dump(2);
}

}  // namespace

TEST_CASE("gen: two-moons row count and printed path") {
  Workspace ws;
  const std::string out = ws.path("s.csv");
  CHECK(run_cli("gen --kind two-moons --n 200 --seed 1 --out " + out) == 0);
  CHECK(line_count(slurp(out)) == 201);  // header + 200 rows
  CHECK(fs::exists(out + ".manifest.json"));
}

TEST_CASE("gen: rotation preserves per-row feature norms") {
  Workspace ws;
  const std::string plain = ws.path("plain.csv");
  const std::string turned = ws.path("turned.csv");
  CHECK(run_cli("gen --kind two-moons --n 80 --seed 4 --out " + plain) == 0);
  CHECK(run_cli("gen --kind two-moons --n 80 --seed 4 --rotate-deg 30 --out " + turned) == 0);
  Dataset a = load_csv(plain);
  Dataset b = load_csv(turned);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(l2_norm(a.x.row(i)) - l2_norm(b.x.row(i))) < 1e-12);
  }
}

TEST_CASE("gen: unknown kind exits 2") {
  Workspace ws;
  CHECK(run_cli("gen --kind cube --out " + ws.path("c.csv")) == 2);
  CHECK(run_cli("gen --out " + ws.path("c.csv")) == 2);  // missing --kind
}

TEST_CASE("gen: circle dataset is unlabeled with the requested radius") {
  Workspace ws;
  const std::string out = ws.path("circle.csv");
  CHECK(run_cli("gen --kind circle --n 50 --noise 0 --radius 2 --seed 3 --out " + out) == 0);
  Dataset ds = load_csv(out);
  CHECK(ds.size() == 50);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.labels[i] == -1);
    CHECK(std::abs(l2_norm(ds.x.row(i)) - 2.0) < 1e-12);
  }
}

TEST_CASE("train: writes metrics, model, manifest; baseline reruns bitwise") {
  Workspace ws;
  const std::string src = ws.path("s.csv");
  const std::string tgt = ws.path("t.csv");
  const std::string cfg = ws.path("cfg.json");
  CHECK(run_cli("gen --kind two-moons --n 64 --noise 0.1 --seed 1 --out " + src) == 0);
  CHECK(run_cli("gen --kind two-moons --n 64 --noise 0.1 --seed 2 --rotate-deg 30 "
                "--domain target --drop-labels --out " +
                tgt) == 0);
  write_config(cfg, {{"weights",
                      {{"lambda_adv", 0.0}, {"lambda_cons", 0.0}, {"lambda_align", 0.0}}},
                     {"alpha", 0.0},
                     {"beta", 0.0}});

  const std::string run1 = ws.path("run1");
  const std::string run2 = ws.path("run2");
  CHECK(run_cli("train --config " + cfg + " --source " + src + " --target " + tgt +
                " --out-dir " + run1) == 0);
  CHECK(run_cli("train --config " + cfg + " --source " + src + " --target " + tgt +
                " --out-dir " + run2) == 0);

  for (const char* name : {"metrics.jsonl", "model.bin", "model.json", "manifest.json"}) {
    CHECK(fs::exists(fs::path(run1) / name));
  }
  CHECK(line_count(slurp(run1 + "/metrics.jsonl")) == 4);  // one record per epoch

  CHECK(metrics_without_wallclock(run1 + "/metrics.jsonl") ==
        metrics_without_wallclock(run2 + "/metrics.jsonl"));
  CHECK(slurp(run1 + "/model.bin") == slurp(run2 + "/model.bin"));

  const json manifest = read_json_file(run1 + "/manifest.json");
  CHECK(manifest.at("prng").get<std::string>() == std::string(Rng::kAlgorithmId));
  for (const auto& [key, value] : manifest.at("artifacts").items()) {
    (void)key;
    CHECK(fs::exists(value.get<std::string>()));
  }
}

TEST_CASE("train: unknown config field exits 2 and names it") {
  Workspace ws;
  const std::string src = ws.path("s.csv");
  const std::string tgt = ws.path("t.csv");
  const std::string cfg = ws.path("bad.json");
  CHECK(run_cli("gen --kind two-moons --n 32 --seed 1 --out " + src) == 0);
  CHECK(run_cli("gen --kind two-moons --n 32 --seed 2 --domain target --drop-labels --out " +
                tgt) == 0);
  std::ofstream(cfg) << R"({"learning_rte": 0.1})";

  CHECK(run_cli("train --config " + cfg + " --source " + src + " --target " + tgt +
                    " --out-dir " + ws.path("run"),
                "bad_field.log") == 2);
  CHECK(slurp(log_dir().path("bad_field.log")).find("learning_rte") != std::string::npos);
}

TEST_CASE("train: diverging run exits 3") {
  Workspace ws;
  const std::string src = ws.path("s.csv");
  const std::string tgt = ws.path("t.csv");
  const std::string cfg = ws.path("cfg.json");
  CHECK(run_cli("gen --kind two-moons --n 64 --seed 1 --out " + src) == 0);
  CHECK(run_cli("gen --kind two-moons --n 64 --seed 2 --domain target --drop-labels --out " +
                tgt) == 0);
  write_config(cfg, {{"learning_rate", 1e30},
                     {"epochs", 50},
                     {"weights",
                      {{"lambda_adv", 0.0}, {"lambda_cons", 0.0}, {"lambda_align", 0.0}}},
                     {"alpha", 0.0},
                     {"beta", 0.0}});
  CHECK(run_cli("train --config " + cfg + " --source " + src + " --target " + tgt +
                " --out-dir " + ws.path("run")) == 3);
}

TEST_CASE("report: self-transfer zeros supinf; oracle gates lambda-star") {
  Workspace ws;
  const std::string src = ws.path("s.csv");
  const std::string cfg = ws.path("cfg.json");
  CHECK(run_cli("gen --kind two-moons --n 64 --noise 0.1 --seed 5 --out " + src) == 0);
  write_config(cfg, {{"epochs", 3},
                     {"weights",
                      {{"lambda_adv", 0.0}, {"lambda_cons", 0.0}, {"lambda_align", 0.0}}},
                     {"alpha", 0.0},
                     {"beta", 0.0}});
  const std::string run = ws.path("run");
  CHECK(run_cli("train --config " + cfg + " --source " + src + " --target " + src +
                " --out-dir " + run) == 0);

  const std::string report_path = ws.path("report.json");
  CHECK(run_cli("report --model " + run + "/model.bin --source " + src + " --target " + src +
                " --config " + cfg + " --out " + report_path) == 0);

  const json report = read_json_file(report_path);
  CHECK(report.at("geod").at("supinf").get<double>() == 0.0);
  for (const char* key : {"epsilon_c", "geod", "bound", "config"}) {
    CHECK(report.contains(key));
  }
  CHECK_FALSE(report.at("bound").contains("lambda_star_upper"));
  CHECK_FALSE(report.contains("risk_split"));

  // Oracle supplied: lambda-star and the risk split appear.
  const std::string with_oracle = ws.path("report_oracle.json");
  CHECK(run_cli("report --model " + run + "/model.bin --source " + src + " --target " + src +
                " --target-oracle " + src + " --config " + cfg + " --out " + with_oracle) == 0);
  const json oracle_report = read_json_file(with_oracle);
  CHECK(oracle_report.at("bound").contains("lambda_star_upper"));
  CHECK(oracle_report.contains("risk_split"));

  // --lambda-star without an oracle is a usage error.
  CHECK(run_cli("report --model " + run + "/model.bin --source " + src + " --target " + src +
                " --lambda-star --config " + cfg + " --out " + ws.path("r2.json")) == 2);
}

TEST_CASE("re-running from the manifest's config snapshot reproduces metrics") {
  Workspace ws;
  const std::string src = ws.path("s.csv");
  const std::string tgt = ws.path("t.csv");
  const std::string cfg = ws.path("cfg.json");
  CHECK(run_cli("gen --kind two-moons --n 64 --noise 0.1 --seed 7 --out " + src) == 0);
  CHECK(run_cli("gen --kind two-moons --n 64 --noise 0.1 --seed 8 --rotate-deg 30 "
                "--domain target --drop-labels --out " +
                tgt) == 0);
  write_config(cfg, {{"epochs", 3}});

  const std::string run1 = ws.path("run1");
  CHECK(run_cli("train --config " + cfg + " --source " + src + " --target " + tgt +
                " --out-dir " + run1) == 0);

  // Replay from the config embedded in the manifest.
  const json manifest = read_json_file(run1 + "/manifest.json");
  const std::string cfg2 = ws.path("cfg_replay.json");
  std::ofstream(cfg2) << manifest.at("config").dump(2);
  const std::string run2 = ws.path("run2");
  CHECK(run_cli("train --config " + cfg2 + " --source " + src + " --target " + tgt +
                " --out-dir " + run2) == 0);

  CHECK(metrics_without_wallclock(run1 + "/metrics.jsonl") ==
        metrics_without_wallclock(run2 + "/metrics.jsonl"));
  CHECK(slurp(run1 + "/model.bin") == slurp(run2 + "/model.bin"));
}

TEST_CASE("model serialization round-trips bit for bit") {
  Workspace ws;
  ModelParams params = init_mlp({3, 6, 4, 2}, 77);
  for (DenseLayer& layer : params.layers) {
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      layer.bias.data()[i] = 0.01 * static_cast<double>(i + 1);
    }
  }
  save_model(params, ws.path("m.bin"), ws.path("m.json"));
  ModelParams back = load_model(ws.path("m.bin"), ws.path("m.json"));
  REQUIRE(back.layers.size() == params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    CHECK(back.layers[l].weight == params.layers[l].weight);
    CHECK(back.layers[l].bias == params.layers[l].bias);
  }
  CHECK(back.layer_sizes() == std::vector<std::size_t>{3, 6, 4, 2});

  CHECK_THROWS_AS(load_model(ws.path("missing.bin"), ws.path("m.json")), ConfigError);
}

TEST_CASE("config json: defaults, round trip, strictness") {
  TrainConfig defaults;
  const json j = config_to_json(defaults);
  TrainConfig parsed = config_from_json(j);
  CHECK(parsed.alpha == defaults.alpha);
  CHECK(parsed.weights.lambda_align == defaults.weights.lambda_align);
  CHECK(parsed.layer_sizes == defaults.layer_sizes);
  CHECK(parsed.seed == defaults.seed);

  CHECK_THROWS_WITH_AS(config_from_json(json{{"weights", {{"lambda_bogus", 1.0}}}}),
                       doctest::Contains("lambda_bogus"), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"epochs", "many"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);

  // Partial configs fall back to the documented defaults.
  TrainConfig partial = config_from_json(json{{"epochs", 7}});
  CHECK(partial.epochs == 7);
  CHECK(partial.learning_rate == defaults.learning_rate);
}

TEST_CASE("version flag prints and exits 0") {
  CHECK(run_cli("--version") == 0);
}
