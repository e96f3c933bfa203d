#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aeunmix/harness.hpp"
#include "json.hpp"

namespace aeunmix {

// Config files are JSON objects with keys architecture, loss, dataset, encoder ("10E" or 10), batch_size,
// learning_rate, gd, plus epochs, init, N, k, master_seed, scaling,
// experiment_id and latent_sigmoid. A "preset": 1..10 key seeds the
// remaining fields from the built-in table before the others apply.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one `key=value` override; the value is parsed as JSON when
// possible and taken as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

// Record files: line 1 is {"meta": {...}} holding everything
// non-deterministic (creation time, wall times); each later line is one
// record with fixed field order.
void write_records(const std::vector<RunRecord>& records, const ExperimentConfig& config,
                   const std::filesystem::path& path);
std::vector<RunRecord> read_records(const std::filesystem::path& path);

// Gradient traces: CSV with header `iteration,layer,mean,std`.
void write_trace_csv(const GradientTrace& trace, const std::filesystem::path& path);
GradientTrace read_trace_csv(const std::filesystem::path& path);
// Empty string when the file satisfies the trace schema, otherwise the reason.
std::string validate_trace_csv(const std::filesystem::path& path);

}  // namespace aeunmix
