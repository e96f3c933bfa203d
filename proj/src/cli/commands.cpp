#include "aeunmix/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "aeunmix/bundle_io.hpp"
#include "aeunmix/errors.hpp"
#include "aeunmix/harness.hpp"
#include "aeunmix/lmm.hpp"
#include "aeunmix/nn/checkpoint.hpp"
#include "aeunmix/records_io.hpp"
#include "aeunmix/report.hpp"
#include "aeunmix/stats/rank_tests.hpp"
#include "aeunmix/stats/retry.hpp"
#include "json.hpp"

namespace aeunmix::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string data;
};

void add_config_options(CLI::App& cmd, ConfigArgs& a) {
  cmd.add_option("--config", a.config_path, "JSON config file");
  cmd.add_option("--set", a.overrides, "override a config key (key=value), repeatable");
  cmd.add_option("--seed", a.seed, "master seed");
  cmd.add_option("--data", a.data, "bundle header; defaults to the config's dataset key");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

ExperimentConfig resolve_config(const ConfigArgs& a) {
  json j = a.config_path.empty() ? json::object() : read_json_file(a.config_path);
  for (const auto& o : a.overrides) apply_override(j, o);
  if (a.seed) j["master_seed"] = *a.seed;
  return config_from_json(j);
}

// Loads the bundle and records the path actually used in config.dataset.
HsiBundle resolve_data(const ConfigArgs& a, ExperimentConfig& config) {
  fs::path path = a.data.empty() ? fs::path(config.dataset) : fs::path(a.data);
  if (path.empty()) throw ConfigError("no dataset: pass --data or set the dataset key");
  if (!fs::exists(path) && !a.config_path.empty() && path.is_relative()) {
    const fs::path beside = fs::path(a.config_path).parent_path() / path;
    if (fs::exists(beside)) path = beside;
  }
  if (!fs::exists(path))
    throw DataError("dataset '" + path.string() + "' not found; create one with `aeunmix gen` or `aeunmix convert`");
  config.dataset = path.string();
  return load_bundle(path);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// gen ----------------------------------------------------------------------

int cmd_gen(const std::vector<std::string>& sets, std::uint64_t seed, const fs::path& out_path, std::ostream& out) {
  json j = json::object();
  for (const auto& s : sets) apply_override(j, s);
  SceneSpec spec;
  if (j.contains("shape")) {
    const auto shape = j["shape"].get<std::string>();
    if (shape == "samson")
      spec = samson_shaped_scene();
    else if (shape == "jasper")
      spec = jasper_shaped_scene();
    else if (shape != "default")
      throw ConfigError("gen: shape must be samson, jasper or default");
  }
  std::optional<double> shared_concentration;  // one value for every endmember
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "shape") continue;
      if (key == "name") spec.name = value.get<std::string>();
      else if (key == "bands") spec.bands = value.get<std::size_t>();
      else if (key == "endmembers") spec.endmembers = value.get<std::size_t>();
      else if (key == "width") spec.width = value.get<std::size_t>();
      else if (key == "height") spec.height = value.get<std::size_t>();
      else if (key == "pure_fraction") spec.pure_fraction = value.get<double>();
      else if (key == "sigma") spec.sigma = value.get<double>();
      else if (key == "smoothness") spec.smoothness = value.get<std::size_t>();
      else if (key == "concentration" && value.is_number()) shared_concentration = value.get<double>();
      else if (key == "concentration") spec.concentration = value.get<std::vector<double>>();
      else throw ConfigError("gen: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError("gen: " + std::string(e.what()));
  }
  if (shared_concentration) spec.concentration.assign(spec.endmembers, *shared_concentration);
  const HsiBundle bundle = make_scene(spec, seed);
  save_bundle(bundle, out_path);
  out << json{{"bundle", out_path.string()}, {"bands", bundle.bands()}, {"pixels", bundle.pixel_count()},
              {"endmembers", spec.endmembers}}
             .dump()
      << '\n';
  return kOk;
}

// train / experiment -------------------------------------------------------

int cmd_train(const ConfigArgs& a, const fs::path& out_dir, std::ostream& out) {
  ExperimentConfig config = resolve_config(a);
  const HsiBundle data = resolve_data(a, config);
  fs::create_directories(out_dir);
  const std::uint64_t init_seed = init_seed_for(config.master_seed, 1);
  const std::uint64_t run_seed = run_seed_for(config.master_seed, 1, 1);
  auto result = train_once(config, data, init_seed, run_seed);
  result.record.init_id = 1;
  result.record.run_id = 1;
  write_trace_csv(result.trace, out_dir / "trace.csv");
  result.record.trace_file = "trace.csv";
  write_records({result.record}, config, out_dir / "records.jsonl");

  nn::CheckpointInfo info;
  info.architecture = config.architecture;
  info.bands = data.bands();
  info.endmembers = result.network.latent_dim();
  info.n1 = config.n1;
  info.options.gd_rate = config.gd_rate;
  info.options.latent_sigmoid = config.latent_sigmoid;
  info.init_scheme = config.init;
  info.init_seed = init_seed;
  info.run_seed = run_seed;
  nn::save_checkpoint(result.network, info, out_dir / "checkpoint.json");

  out << record_to_json(result.record).dump() << '\n';
  return kOk;
}

int cmd_experiment(const ConfigArgs& a, const fs::path& out_dir, int jobs, bool trace, std::ostream& out) {
  ExperimentConfig config = resolve_config(a);
  const HsiBundle data = resolve_data(a, config);
  fs::create_directories(out_dir);
  GridOptions grid;
  grid.jobs = jobs;
  if (trace) grid.trace_dir = out_dir / "traces";
  const auto records = run_experiment(config, data, grid);
  write_records(records, config, out_dir / "records.jsonl");
  std::size_t diverged = 0;
  for (const auto& r : records) diverged += r.diverged ? 1 : 0;
  out << json{{"records", (out_dir / "records.jsonl").string()}, {"runs", records.size()}, {"diverged", diverged}}.dump()
      << '\n';
  return kOk;
}

// analyze / plan / report --------------------------------------------------

void print_stat_summary(const stats::StatReport& rep, std::ostream& out) {
  out << "kruskal_wallis: H=" << fmt(rep.kruskal.H) << " p=" << fmt(rep.kruskal.p) << " log_p=" << fmt(rep.kruskal.log_p)
      << '\n';
  if (rep.levene)
    out << "levene: W=" << fmt(rep.levene->statistic) << " p=" << fmt(rep.levene->p) << '\n';
  else
    out << "levene: skipped (a group has fewer than 2 scores)\n";
  if (rep.posthoc)
    out << "posthoc: " << rep.posthoc->rows() << "x" << rep.posthoc->cols() << " ph_ratio=" << fmt(rep.ph_ratio) << '\n';
  else
    out << "posthoc: not run, H0 not rejected at alpha=" << fmt(rep.alpha) << '\n';
}

int cmd_analyze(const fs::path& records_path, const std::string& metric, double alpha, bool holm, const fs::path& out_dir,
                std::ostream& out) {
  const auto records = read_records(records_path);
  stats::ConoverOptions opts;
  opts.holm = holm;
  const auto rep = stats::analyze(records, parse_metric(metric), alpha, opts);
  if (!out_dir.empty()) write_stat_report(rep, out_dir);
  print_stat_summary(rep, out);
  return kOk;
}

int cmd_plan(std::optional<double> p_hat, const std::string& records_path, const std::string& metric,
             std::optional<double> threshold, double confidence, std::ostream& out) {
  stats::RetryPlan plan;
  plan.confidence = confidence;
  if (p_hat) {
    plan.p_hat = *p_hat;
  } else {
    if (records_path.empty() || !threshold) throw ConfigError("plan: pass --p-hat, or --records with --threshold");
    const auto records = read_records(records_path);
    plan.threshold = *threshold;
    plan.p_hat = stats::estimate_success_prob(records, parse_metric(metric), *threshold);
  }
  plan.n_req = stats::required_trials(plan.p_hat, confidence);
  if (threshold) out << "threshold=" << fmt(*threshold) << ' ';
  out << "p_hat=" << fmt(plan.p_hat) << " confidence=" << fmt(confidence) << " n_req=" << plan.n_req << '\n';
  return kOk;
}

int cmd_report(const fs::path& records_path, const std::optional<std::string>& metric, std::vector<double> thresholds,
               double confidence, std::optional<std::size_t> bins, double alpha, const fs::path& out_dir,
               std::ostream& out) {
  const auto records = read_records(records_path);
  LossKind loss = LossKind::MSE;
  {
    std::ifstream in(records_path);
    std::string first;
    std::getline(in, first);
    const json meta = json::parse(first, nullptr, false);
    if (!meta.is_discarded() && meta.contains("meta") && meta["meta"].contains("config"))
      loss = parse_loss(meta["meta"]["config"].value("loss", std::string("MSE")));
  }
  ReportOptions opts;
  opts.metric = metric ? parse_metric(*metric) : default_report_metric(loss);
  opts.thresholds = thresholds.empty() ? default_thresholds(loss) : std::move(thresholds);
  opts.confidence = confidence;
  opts.bins = bins;

  std::optional<stats::StatReport> rep;
  try {
    rep = stats::analyze(records, opts.metric, alpha);
  } catch (const PreconditionError& e) {
    out << "statistics skipped: " << e.what() << '\n';
  }
  emit_report(records, rep, out_dir, opts);
  out << json{{"report", out_dir.string()}, {"runs", records.size()}}.dump() << '\n';
  return kOk;
}

void print_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Autoencoder hyperspectral unmixing: data, training grids, statistics"};
  app.require_subcommand(1);

  ConfigArgs cfg;
  std::string out_path;
  int jobs = 0;
  std::string metric = "recon_rmse";
  std::optional<std::string> report_metric;
  std::optional<double> threshold;
  std::vector<double> thresholds;
  double confidence = 0.95;
  double alpha = 0.05;
  bool holm = false;
  bool trace = false;
  std::optional<double> p_hat;
  std::string records;
  std::optional<std::size_t> bins;
  std::uint64_t gen_seed = 0;
  std::vector<std::string> gen_sets;
  std::string csv_pixels, csv_endmembers, csv_abundances, csv_name = "converted";
  std::optional<std::size_t> width, height;

  auto* gen = app.add_subcommand("gen", "write a synthetic scene bundle");
  gen->add_option("--out", out_path, "bundle header path (.json)")->required();
  gen->add_option("--seed", gen_seed, "scene seed");
  gen->add_option("--set", gen_sets, "scene key=value: shape, bands, endmembers, width, height, pure_fraction, sigma, smoothness, name");

  auto* convert = app.add_subcommand("convert", "convert CSV (one row per pixel or endmember spectrum) into a bundle");
  convert->add_option("--pixels", csv_pixels, "pixel CSV, M rows of B values")->required();
  convert->add_option("--endmembers", csv_endmembers, "endmember CSV, E rows of B values");
  convert->add_option("--abundances", csv_abundances, "abundance CSV, M rows of E values");
  convert->add_option("--name", csv_name);
  convert->add_option("--width", width);
  convert->add_option("--height", height);
  convert->add_option("--out", out_path, "bundle header path (.json)")->required();

  auto* train = app.add_subcommand("train", "train one network; writes record, trace and checkpoint");
  add_config_options(*train, cfg);
  train->add_option("--out", out_path, "output directory")->required();

  auto* experiment = app.add_subcommand("experiment", "run the N x k grid; writes records.jsonl");
  add_config_options(*experiment, cfg);
  experiment->add_option("--out", out_path, "output directory")->required();
  experiment->add_option("--jobs", jobs, "worker threads (0: OpenMP default)");
  experiment->add_flag("--trace", trace, "write per-run gradient traces");

  auto* analyze = app.add_subcommand("analyze", "Levene, Kruskal-Wallis and gated Conover-Iman on a record file");
  analyze->add_option("--records", records, "records.jsonl")->required();
  analyze->add_option("--metric", metric);
  analyze->add_option("--alpha", alpha);
  analyze->add_flag("--holm", holm, "Holm-adjust the post-hoc p-values");
  analyze->add_option("--out", out_path, "directory for stat_report.json and post-hoc CSVs");

  auto* plan = app.add_subcommand("plan", "number of retries needed to hit a threshold");
  plan->add_option("--p-hat", p_hat, "success probability");
  plan->add_option("--records", records, "estimate p_hat from a record file");
  plan->add_option("--metric", metric);
  plan->add_option("--threshold", threshold);
  plan->add_option("--confidence", confidence)->check(CLI::Range(0.0, 1.0));

  auto* report = app.add_subcommand("report", "histogram, trials-vs-threshold and summary files");
  report->add_option("--records", records, "records.jsonl")->required();
  report->add_option("--metric", report_metric);
  report->add_option("--threshold", thresholds, "threshold grid (repeatable)");
  report->add_option("--confidence", confidence)->check(CLI::Range(0.0, 1.0));
  report->add_option("--bins", bins, "fixed bin count instead of Freedman-Diaconis");
  report->add_option("--alpha", alpha);
  report->add_option("--out", out_path, "output directory")->required();

  std::vector<const char*> argv{"aeunmix"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_sets, gen_seed, out_path, out);
    if (*convert) {
      auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
      const auto bundle = convert_csv(csv_pixels, opt_path(csv_endmembers), opt_path(csv_abundances), csv_name, width, height);
      save_bundle(bundle, out_path);
      out << json{{"bundle", out_path}, {"bands", bundle.bands()}, {"pixels", bundle.pixel_count()}}.dump() << '\n';
      return kOk;
    }
    if (*train) return cmd_train(cfg, out_path, out);
    if (*experiment) return cmd_experiment(cfg, out_path, jobs, trace, out);
    if (*analyze) return cmd_analyze(records, metric, alpha, holm, out_path, out);
    if (*plan) return cmd_plan(p_hat, records, metric, threshold, confidence, out);
    if (*report) return cmd_report(records, report_metric, thresholds, confidence, bins, alpha, out_path, out);
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what());
    return kUsage;
  } catch (const DataError& e) {
    print_error(err, "data", e.what());
    return kData;
  } catch (const UnreachableThresholdError& e) {
    print_error(err, "unreachable", e.what());
    return kData;
  } catch (const PreconditionError& e) {
    print_error(err, "precondition", e.what());
    return kData;
  } catch (const FormatError& e) {
    print_error(err, "format", e.what());
    return kFormat;
  } catch (const fs::filesystem_error& e) {
    print_error(err, "io", e.what());
    return kFormat;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kOther;
  }
  return kOther;
}

}  // namespace aeunmix::cli
