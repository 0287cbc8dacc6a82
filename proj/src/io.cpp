#include "maada/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace maada {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& j, const std::string& name, const T& fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + name + "' has the wrong type");
  }
}

}  // namespace

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: document must be a JSON object");

  static const char* known[] = {"layer_sizes",         "alpha",         "beta",
                                "weights",             "k",             "m",
                                "chart_refresh_every", "learning_rate", "epochs",
                                "batch_size",          "seed",          "norm_floor"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* name : known) ok = ok || key == name;
    if (!ok) throw ConfigError("config: unknown field '" + key + "'");
  }

  TrainConfig config;
  config.layer_sizes = get_field(j, "layer_sizes", config.layer_sizes);
  config.alpha = get_field(j, "alpha", config.alpha);
  config.beta = get_field(j, "beta", config.beta);
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    if (!w.is_object()) throw ConfigError("config: field 'weights' must be an object");
    for (const auto& [key, value] : w.items()) {
      (void)value;
      if (key != "lambda_adv" && key != "lambda_cons" && key != "lambda_align") {
        throw ConfigError("config: unknown field 'weights." + key + "'");
      }
    }
    config.weights.lambda_adv = get_field(w, "lambda_adv", config.weights.lambda_adv);
    config.weights.lambda_cons = get_field(w, "lambda_cons", config.weights.lambda_cons);
    config.weights.lambda_align = get_field(w, "lambda_align", config.weights.lambda_align);
  }
  config.k = get_field(j, "k", config.k);
  config.m = get_field(j, "m", config.m);
  config.chart_refresh_every = get_field(j, "chart_refresh_every", config.chart_refresh_every);
  config.learning_rate = get_field(j, "learning_rate", config.learning_rate);
  config.epochs = get_field(j, "epochs", config.epochs);
  config.batch_size = get_field(j, "batch_size", config.batch_size);
  config.seed = get_field(j, "seed", config.seed);
  config.norm_floor = get_field(j, "norm_floor", config.norm_floor);
  config.validate();
  return config;
}

json config_to_json(const TrainConfig& config) {
  return json{{"layer_sizes", config.layer_sizes},
              {"alpha", config.alpha},
              {"beta", config.beta},
              {"weights",
               {{"lambda_adv", config.weights.lambda_adv},
                {"lambda_cons", config.weights.lambda_cons},
                {"lambda_align", config.weights.lambda_align}}},
              {"k", config.k},
              {"m", config.m},
              {"chart_refresh_every", config.chart_refresh_every},
              {"learning_rate", config.learning_rate},
              {"epochs", config.epochs},
              {"batch_size", config.batch_size},
              {"seed", config.seed},
              {"norm_floor", config.norm_floor}};
}

TrainConfig load_config(const std::string& path) {
  return config_from_json(read_json_file(path));
}

void save_model(const ModelParams& params, const std::string& bin_path,
                const std::string& header_path) {
  json header;
  header["format"] = "maada-model-v1";
  header["dtype"] = "f64-le";
  header["layer_sizes"] = params.layer_sizes();
  json tensors = json::array();
  std::size_t count = 0;

  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError("save_model: cannot open '" + bin_path + "'");
  auto dump = [&](const std::string& name, const Matrix& m) {
    tensors.push_back(json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    bin.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    count += m.size();
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    dump("w" + std::to_string(l), params.layers[l].weight);
    dump("b" + std::to_string(l), params.layers[l].bias);
  }
  if (!bin) throw ConfigError("save_model: write to '" + bin_path + "' failed");
  bin.close();

  header["tensors"] = tensors;
  header["value_count"] = count;
  write_json_file(header, header_path);
}

ModelParams load_model(const std::string& bin_path, const std::string& header_path) {
  const json header = read_json_file(header_path);
  if (get_field<std::string>(header, "format", "") != "maada-model-v1") {
    throw ConfigError("load_model: unrecognized header format in '" + header_path + "'");
  }

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError("load_model: cannot open '" + bin_path + "'");

  ModelParams params;
  const json& tensors = header.at("tensors");
  auto read_matrix = [&](const json& t) {
    const std::size_t rows = t.at("rows").get<std::size_t>();
    const std::size_t cols = t.at("cols").get<std::size_t>();
    std::vector<double> data(rows * cols);
    bin.read(reinterpret_cast<char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!bin) throw ConfigError("load_model: '" + bin_path + "' is truncated");
    return Matrix(rows, cols, std::move(data));
  };
  for (std::size_t i = 0; i + 1 < tensors.size(); i += 2) {
    DenseLayer layer{read_matrix(tensors[i]), read_matrix(tensors[i + 1])};
    params.layers.push_back(std::move(layer));
  }
  if (params.layers.empty()) throw ConfigError("load_model: no tensors in header");
  return params;
}

json epoch_record_to_json(const EpochRecord& record) {
  json j{{"epoch", record.epoch},
         {"l_src", record.losses.l_src},
         {"l_adv", record.losses.l_adv},
         {"l_cons", record.losses.l_cons},
         {"l_align", record.losses.l_align},
         {"l_total", record.losses.l_total},
         {"source_accuracy", record.source_accuracy},
         {"wall_clock_ms", record.wall_clock_ms}};
  if (record.target_accuracy) {
    j["target_accuracy"] = *record.target_accuracy;
  } else {
    j["target_accuracy"] = nullptr;
  }
  return j;
}

std::string metrics_to_jsonl(const MetricsLog& log) {
  std::ostringstream out;
  for (const EpochRecord& record : log.records) out << epoch_record_to_json(record) << "\n";
  return out.str();
}

void save_metrics(const MetricsLog& log, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("save_metrics: cannot open '" + path + "'");
  file << metrics_to_jsonl(log);
  if (!file) throw ConfigError("save_metrics: write to '" + path + "' failed");
}

json geod_to_json(const GeoDBreakdown& geod) {
  return json{{"supinf", geod.supinf},
              {"curvgap", geod.curvgap},
              {"scale", geod.scale},
              {"total", geod.total}};
}

json risk_split_to_json(const RiskSplit& split) {
  return json{{"on_manifold_error", split.on_manifold_error},
              {"off_manifold_sensitivity", split.off_manifold_sensitivity}};
}

json bound_report_to_json(const BoundReport& report) {
  json j{{"r_hat_s", report.r_hat_s},
         {"epsilon_c", {{"mean", report.epsilon_c_mean}, {"max", report.epsilon_c_max}}},
         {"geod", geod_to_json(report.geod)},
         {"c_over_eps2n", report.c_over_eps2n},
         {"rhs_partial", report.rhs_partial}};
  if (report.lambda_star_upper) j["lambda_star_upper"] = *report.lambda_star_upper;
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("write_json_file: cannot open '" + path + "'");
  file << j.dump(2) << "\n";
  if (!file) throw ConfigError("write_json_file: write to '" + path + "' failed");
}

json read_json_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(file);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what(),
                     static_cast<long>(e.byte));
  }
}

}  // namespace maada
