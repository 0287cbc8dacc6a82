// Command-line front end: dataset generation, training, and geometry/bound
// reporting from JSON configs. Exit codes: 0 success, 2 usage or config
// error, 3 numeric failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "maada/analysis.hpp"
#include "maada/io.hpp"
#include "maada/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

json base_manifest(const std::string& command) {
  json m;
  m["tool"] = "maada";
  m["version"] = MAADA_VERSION;
  m["prng"] = maada::Rng::kAlgorithmId;
  m["command"] = command;
  return m;
}

struct GenArgs {
  std::string kind;
  std::size_t n = 200;
  double noise = 0.1;
  bool noise_set = false;
  double radius = 1.0;
  std::uint64_t seed = 0;
  double rotate_deg = 0.0;
  std::string domain = "source";
  bool drop_labels = false;
  std::string out;
};

int run_gen(const GenArgs& args) {
  maada::Dataset ds;
  if (args.kind == "two-moons") {
    ds = maada::gen_two_moons(args.n, args.noise, args.seed);
  } else if (args.kind == "circle") {
    if (args.noise_set && args.noise != 0.0) {
      throw maada::ConfigError("gen: --noise applies to two-moons only");
    }
    ds = maada::gen_circle(args.n, args.radius, args.seed);
  } else {
    throw maada::ConfigError("gen: unknown --kind '" + args.kind +
                             "' (expected two-moons or circle)");
  }

  std::optional<maada::Domain> retag;
  if (args.domain == "target") {
    retag = maada::Domain::kTarget;
  } else if (args.domain != "source") {
    throw maada::ConfigError("gen: --domain must be source or target");
  }
  if (args.rotate_deg != 0.0 || retag || args.drop_labels) {
    ds = maada::rotate(ds, args.rotate_deg * kPi / 180.0, retag, args.drop_labels);
  }

  maada::save_csv(ds, args.out);

  json manifest = base_manifest("gen");
  manifest["seed"] = args.seed;
  manifest["config"] = {{"kind", args.kind},        {"n", args.n},
                        {"noise", args.noise},      {"radius", args.radius},
                        {"rotate_deg", args.rotate_deg}, {"domain", args.domain},
                        {"drop_labels", args.drop_labels}};
  manifest["artifacts"] = {{"dataset", args.out}};
  maada::write_json_file(manifest, args.out + ".manifest.json");

  std::cout << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string source_path;
  std::string target_path;
  std::string out_dir;
};

int run_train(const TrainArgs& args) {
  const maada::TrainConfig config = maada::load_config(args.config_path);
  const maada::Dataset source = maada::load_csv(args.source_path);
  const maada::Dataset target = maada::load_csv(args.target_path);

  const maada::TrainResult result = maada::train(config, source, target);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  const std::string metrics_path = (dir / "metrics.jsonl").string();
  const std::string model_path = (dir / "model.bin").string();
  const std::string header_path = (dir / "model.json").string();
  const std::string manifest_path = (dir / "manifest.json").string();

  maada::save_metrics(result.log, metrics_path);
  maada::save_model(result.params, model_path, header_path);

  json manifest = base_manifest("train");
  manifest["seed"] = config.seed;
  manifest["config"] = maada::config_to_json(config);
  manifest["inputs"] = {{"source", args.source_path}, {"target", args.target_path}};
  manifest["artifacts"] = {{"metrics", metrics_path},
                           {"model", model_path},
                           {"model_header", header_path}};
  maada::write_json_file(manifest, manifest_path);

  std::cout << args.out_dir << "\n";
  return 0;
}

struct ReportArgs {
  std::string model_path;
  std::string source_path;
  std::string target_path;
  std::string oracle_path;
  std::string config_path;
  std::string out;
  bool lambda_star = false;
};

int run_report(const ReportArgs& args) {
  if (args.lambda_star && args.oracle_path.empty()) {
    throw maada::ConfigError("report: --lambda-star requires --target-oracle");
  }

  const maada::TrainConfig config = maada::load_config(args.config_path);
  const maada::Dataset source = maada::load_csv(args.source_path);
  const maada::Dataset target = maada::load_csv(args.target_path);

  const fs::path header = fs::path(args.model_path).replace_extension(".json");
  const maada::ModelParams params = maada::load_model(args.model_path, header.string());

  std::optional<maada::Dataset> oracle;
  if (!args.oracle_path.empty()) oracle = maada::load_csv(args.oracle_path);

  const maada::BoundReport bound =
      maada::bound_report(params, source, target, oracle, config);

  json doc;
  doc["tool"] = "maada";
  doc["version"] = MAADA_VERSION;
  doc["prng"] = maada::Rng::kAlgorithmId;
  doc["config"] = maada::config_to_json(config);
  doc["epsilon_c"] = {{"mean", bound.epsilon_c_mean}, {"max", bound.epsilon_c_max}};
  doc["geod"] = maada::geod_to_json(bound.geod);
  doc["bound"] = maada::bound_report_to_json(bound);
  if (oracle) {
    doc["risk_split"] = maada::risk_split_to_json(
        maada::risk_split(params, *oracle, config.beta, config.k, config.m));
  }
  maada::write_json_file(doc, args.out);

  json manifest = base_manifest("report");
  manifest["seed"] = config.seed;
  manifest["config"] = maada::config_to_json(config);
  manifest["inputs"] = {{"model", args.model_path},
                        {"source", args.source_path},
                        {"target", args.target_path},
                        {"target_oracle", args.oracle_path}};
  manifest["artifacts"] = {{"report", args.out}};
  maada::write_json_file(manifest, args.out + ".manifest.json");

  std::cout << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manifold-aware adversarial data augmentation for domain transfer"};
  app.set_version_flag("--version", std::string(MAADA_VERSION));
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  gen->add_option("--kind", gen_args.kind, "two-moons or circle")->required();
  gen->add_option("--n", gen_args.n, "number of points");
  gen->add_option("--noise", gen_args.noise, "gaussian noise std (two-moons)")
      ->each([&gen_args](const std::string&) { gen_args.noise_set = true; });
  gen->add_option("--radius", gen_args.radius, "circle radius");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--rotate-deg", gen_args.rotate_deg, "rotate the cloud (degrees)");
  gen->add_option("--domain", gen_args.domain, "domain tag: source or target");
  gen->add_flag("--drop-labels", gen_args.drop_labels, "erase labels to -1");
  gen->add_option("--out", gen_args.out, "output CSV path")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a model from a JSON config");
  train->add_option("--config", train_args.config_path, "JSON config")->required();
  train->add_option("--source", train_args.source_path, "labeled source CSV")->required();
  train->add_option("--target", train_args.target_path, "target CSV")->required();
  train->add_option("--out-dir", train_args.out_dir, "output directory")->required();

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "geometry and transfer-bound report");
  report->add_option("--model", report_args.model_path, "model .bin (expects .json sidecar)")
      ->required();
  report->add_option("--source", report_args.source_path, "labeled source CSV")->required();
  report->add_option("--target", report_args.target_path, "target CSV")->required();
  report->add_option("--target-oracle", report_args.oracle_path,
                     "labeled target CSV (analysis only)");
  report->add_option("--config", report_args.config_path, "JSON config")->required();
  report->add_option("--out", report_args.out, "output report JSON")->required();
  report->add_flag("--lambda-star", report_args.lambda_star,
                   "require the joint-hypothesis estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // help/version exit cleanly, usage errors map to 2
  }

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (train->parsed()) return run_train(train_args);
    if (report->parsed()) return run_report(report_args);
  } catch (const maada::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const maada::EvalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
