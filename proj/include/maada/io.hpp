#ifndef MAADA_IO_HPP
#define MAADA_IO_HPP

#include <string>

#include "json.hpp"
#include "maada/analysis.hpp"
#include "maada/trainer.hpp"

namespace maada {

// --- training configuration ----------------------------------------------
// Strict schema: unknown fields are rejected, missing fields take the
// documented defaults.
TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig load_config(const std::string& path);

// --- model parameters ------------------------------------------------------
// Flat little-endian f64 binary plus a JSON shape header in a sidecar file.
void save_model(const ModelParams& params, const std::string& bin_path,
                const std::string& header_path);
ModelParams load_model(const std::string& bin_path, const std::string& header_path);

// --- metrics / reports -----------------------------------------------------
nlohmann::json epoch_record_to_json(const EpochRecord& record);
// One JSON object per line, one line per epoch.
std::string metrics_to_jsonl(const MetricsLog& log);
void save_metrics(const MetricsLog& log, const std::string& path);

nlohmann::json geod_to_json(const GeoDBreakdown& geod);
nlohmann::json bound_report_to_json(const BoundReport& report);
nlohmann::json risk_split_to_json(const RiskSplit& split);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

}  // namespace maada

#endif
