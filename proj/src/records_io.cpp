#include "aeunmix/records_io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "aeunmix/errors.hpp"

namespace aeunmix {
namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::size_t parse_encoder(const json& v) {
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::size_t>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "-" || s.empty()) return 1;
    if (!s.empty() && (s.back() == 'E' || s.back() == 'e')) s.pop_back();
    try {
      return static_cast<std::size_t>(std::stoul(s));
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("config: encoder must look like 10 or \"10E\"");
}

double opt_to_double(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "preset", "experiment_id", "architecture", "loss", "dataset", "encoder", "batch_size",
      "learning_rate", "gd", "epochs", "init", "N", "k", "master_seed", "scaling", "latent_sigmoid"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");

  try {
    ExperimentConfig c;
    if (j.contains("preset")) c = preset_config(j.at("preset").get<int>());
    if (j.contains("experiment_id")) {
      const auto& v = j.at("experiment_id");
      c.experiment_id = v.is_string() ? v.get<std::string>() : v.dump();
    }
    if (j.contains("architecture")) c.architecture = nn::parse_architecture(j.at("architecture").get<std::string>());
    if (j.contains("loss")) c.loss = parse_loss(j.at("loss").get<std::string>());
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("encoder")) c.n1 = parse_encoder(j.at("encoder"));
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("gd")) c.gd_rate = j.at("gd").is_null() ? 0.0 : j.at("gd").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("init")) c.init = nn::parse_init_scheme(j.at("init").get<std::string>());
    if (j.contains("N")) c.N = j.at("N").get<std::size_t>();
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("scaling")) c.scaling = j.at("scaling").get<bool>();
    if (j.contains("latent_sigmoid")) c.latent_sigmoid = j.at("latent_sigmoid").get<bool>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
}

json config_to_json(const ExperimentConfig& c) {
  ordered_json o;
  o["experiment_id"] = c.experiment_id;
  o["architecture"] = std::string(nn::to_string(c.architecture));
  o["loss"] = std::string(to_string(c.loss));
  o["dataset"] = c.dataset;
  o["encoder"] = std::to_string(c.n1) + "E";
  o["batch_size"] = c.batch_size;
  o["learning_rate"] = c.learning_rate;
  o["gd"] = c.gd_rate;
  o["epochs"] = c.effective_epochs();
  o["init"] = std::string(nn::to_string(c.init));
  o["N"] = c.N;
  o["k"] = c.k;
  o["master_seed"] = c.master_seed;
  o["scaling"] = c.scaling;
  o["latent_sigmoid"] = c.latent_sigmoid;
  return json::parse(o.dump());
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed = json::parse(value, nullptr, false);
  config[key] = parsed.is_discarded() ? json(value) : parsed;
}

json record_to_json(const RunRecord& r) {
  ordered_json o;
  o["experiment_id"] = r.experiment_id;
  o["init_id"] = r.init_id;
  o["run_id"] = r.run_id;
  o["init_seed"] = r.init_seed;
  o["run_seed"] = r.run_seed;
  o["init_checksum"] = r.init_checksum;
  o["initial_loss"] = double_or_null(r.initial_loss);
  o["final_loss"] = double_or_null(r.final_loss);
  o["recon_rmse"] = double_or_null(r.recon_rmse);
  o["recon_sad"] = double_or_null(r.recon_sad);
  o["abundance_rmse"] = r.abundance_rmse ? double_or_null(*r.abundance_rmse) : json(nullptr);
  o["endmember_sad"] = r.endmember_sad ? double_or_null(*r.endmember_sad) : json(nullptr);
  o["abundance_rmse_per_endmember"] = r.abundance_rmse_per_endmember;
  if (r.permutation) {
    std::vector<std::size_t> one_based;
    for (auto v : r.permutation->mapping) one_based.push_back(v + 1);
    o["permutation"] = one_based;
  } else {
    o["permutation"] = nullptr;
  }
  o["diverged"] = r.diverged;
  o["iterations"] = r.iterations;
  o["trace_file"] = r.trace_file;
  return json::parse(o.dump());
}

RunRecord record_from_json(const json& j) {
  try {
    RunRecord r;
    r.experiment_id = j.at("experiment_id").get<std::string>();
    r.init_id = j.at("init_id").get<std::size_t>();
    r.run_id = j.at("run_id").get<std::size_t>();
    r.init_seed = j.at("init_seed").get<std::uint64_t>();
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.init_checksum = j.value("init_checksum", std::uint64_t{0});
    r.initial_loss = opt_to_double(j.value("initial_loss", json(nullptr)));
    r.final_loss = opt_to_double(j.value("final_loss", json(nullptr)));
    r.recon_rmse = opt_to_double(j.at("recon_rmse"));
    r.recon_sad = opt_to_double(j.value("recon_sad", json(nullptr)));
    if (j.contains("abundance_rmse") && !j.at("abundance_rmse").is_null()) r.abundance_rmse = j.at("abundance_rmse").get<double>();
    if (j.contains("endmember_sad") && !j.at("endmember_sad").is_null()) r.endmember_sad = j.at("endmember_sad").get<double>();
    if (j.contains("abundance_rmse_per_endmember"))
      r.abundance_rmse_per_endmember = j.at("abundance_rmse_per_endmember").get<std::vector<double>>();
    if (j.contains("permutation") && !j.at("permutation").is_null()) {
      Permutation p;
      for (auto v : j.at("permutation").get<std::vector<std::size_t>>()) p.mapping.push_back(v - 1);
      r.permutation = p;
    }
    r.diverged = j.value("diverged", false);
    r.iterations = j.value("iterations", std::size_t{0});
    r.trace_file = j.value("trace_file", std::string());
    return r;
  } catch (const json::exception& e) {
    throw FormatError("malformed run record: " + std::string(e.what()));
  }
}

void write_records(const std::vector<RunRecord>& records, const ExperimentConfig& config, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write records: " + path.string());
  json wall = json::array();
  for (const auto& r : records) wall.push_back(r.wall_time_s);
  json meta{{"meta", {{"format", "aeunmix-records"}, {"version", 1}, {"created", now_iso8601()},
                      {"wall_time_s", wall}, {"config", config_to_json(config)}}}};
  out << meta.dump() << '\n';
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<RunRecord> read_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open records: " + path.string());
  std::vector<RunRecord> out;
  std::vector<double> wall;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("records line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("meta")) {
      if (j["meta"].contains("wall_time_s")) wall = j["meta"]["wall_time_s"].get<std::vector<double>>();
      continue;
    }
    out.push_back(record_from_json(j));
  }
  if (wall.size() == out.size())
    for (std::size_t i = 0; i < out.size(); ++i) out[i].wall_time_s = wall[i];
  return out;
}

void write_trace_csv(const GradientTrace& trace, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write trace: " + path.string());
  out << "iteration,layer,mean,std\n";
  out << std::setprecision(17);
  for (const auto& r : trace.rows) out << r.iteration << ',' << r.layer << ',' << r.mean << ',' << r.std << '\n';
}

GradientTrace read_trace_csv(const fs::path& path) {
  if (const auto why = validate_trace_csv(path); !why.empty()) throw FormatError(why);
  std::ifstream in(path);
  GradientTrace t;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string it, layer, mean, sd;
    std::getline(ss, it, ',');
    std::getline(ss, layer, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, sd, ',');
    t.rows.push_back({std::stoul(it), layer, std::stod(mean), std::stod(sd)});
  }
  return t;
}

std::string validate_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return "cannot open trace " + path.string();
  std::string line;
  if (!std::getline(in, line) || line != "iteration,layer,mean,std") return "trace header must be iteration,layer,mean,std";
  std::size_t lineno = 1;
  long long last_iteration = -1;
  std::set<std::string> layers_at_iteration;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) return "trace line " + std::to_string(lineno) + ": expected 4 fields";
    long long iteration = 0;
    try {
      std::size_t pos = 0;
      iteration = std::stoll(cells[0], &pos);
      if (pos != cells[0].size() || iteration < 0) throw std::invalid_argument("iteration");
      for (int k : {2, 3}) {
        const double v = std::stod(cells[k], &pos);
        if (pos != cells[k].size()) throw std::invalid_argument("value");
        if (k == 3 && v < 0.0) return "trace line " + std::to_string(lineno) + ": negative std";
      }
    } catch (const std::exception&) {
      return "trace line " + std::to_string(lineno) + ": non-numeric field";
    }
    if (cells[1].empty()) return "trace line " + std::to_string(lineno) + ": empty layer";
    if (iteration < last_iteration) return "trace line " + std::to_string(lineno) + ": iterations decrease";
    if (iteration > last_iteration) layers_at_iteration.clear();
    if (!layers_at_iteration.insert(cells[1]).second)
      return "trace line " + std::to_string(lineno) + ": duplicate (iteration, layer)";
    last_iteration = iteration;
  }
  return {};
}

}  // namespace aeunmix
