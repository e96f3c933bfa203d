#include "aeunmix/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

#include "aeunmix/errors.hpp"
#include "aeunmix/nn/adam.hpp"
#include "aeunmix/records_io.hpp"
#include "aeunmix/seeding.hpp"

namespace aeunmix {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
  std::string t(s);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  return t;
}

LossResult compute_loss(LossKind kind, const Matrix& target, const Matrix& recon) {
  return kind == LossKind::MSE ? mse_loss(target, recon) : sad_loss(target, recon);
}

void mean_std(const Matrix& m, double& mean, double& sd) {
  const double n = double(m.size());
  mean = std::accumulate(m.values().begin(), m.values().end(), 0.0) / n;
  double v = 0.0;
  for (double x : m.values()) v += (x - mean) * (x - mean);
  sd = std::sqrt(v / n);
}

bool has_batch_norm(const nn::Network& net) {
  return std::any_of(net.encoder().begin(), net.encoder().end(),
                     [](const auto& l) { return l->kind() == nn::LayerKind::BatchNorm; });
}

}  // namespace

std::string_view to_string(LossKind loss) { return loss == LossKind::MSE ? "MSE" : "SAD"; }

LossKind parse_loss(std::string_view text) {
  const auto t = lower(text);
  if (t == "mse") return LossKind::MSE;
  if (t == "sad") return LossKind::SAD;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected MSE or SAD)");
}

std::size_t ExperimentConfig::effective_epochs() const {
  if (epochs > 0) return epochs;
  return architecture == nn::Architecture::Original ? kDefaultEpochsOriginal : kDefaultEpochsBasic;
}

void ExperimentConfig::validate() const {
  if (N < 1 || k < 1) throw ConfigError("config: N and k must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (architecture == nn::Architecture::Original && batch_size < 2)
    throw ConfigError("config: the original architecture needs batch_size >= 2 (batch norm)");
  if (architecture == nn::Architecture::Basic && n1 < 1) throw ConfigError("config: encoder multiplier must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("config: learning_rate must be > 0");
  if (!(gd_rate >= 0.0 && gd_rate < 1.0)) throw ConfigError("config: gd must lie in [0, 1)");
}

ExperimentConfig preset_config(int id) {
  using nn::Architecture;
  struct Row {
    Architecture arch;
    LossKind loss;
    const char* dataset;
    std::size_t n1;
    std::size_t batch;
    double lr;
    double gd;
  };
  static const Row rows[] = {
      {Architecture::Original, LossKind::MSE, "samson", 0, 100, 0.01, 0.0},
      {Architecture::Original, LossKind::SAD, "samson", 0, 100, 0.01, 0.0},
      {Architecture::Original, LossKind::SAD, "samson", 0, 20, 0.01, 0.1},
      {Architecture::Basic, LossKind::MSE, "samson", 10, 4, 0.0001, 0.0},
      {Architecture::Basic, LossKind::SAD, "samson", 20, 4, 0.0001, 0.0},
      {Architecture::Original, LossKind::MSE, "jasper", 0, 100, 0.01, 0.0},
      {Architecture::Original, LossKind::SAD, "jasper", 0, 100, 0.01, 0.0},
      {Architecture::Original, LossKind::MSE, "jasper", 0, 5, 0.01, 0.1},
      {Architecture::Original, LossKind::SAD, "jasper", 0, 5, 0.01, 0.1},
      {Architecture::Basic, LossKind::MSE, "jasper", 10, 20, 0.001, 0.0},
  };
  if (id < 1 || id > 10) throw ConfigError("preset must be 1..10");
  const Row& r = rows[id - 1];
  ExperimentConfig c;
  c.experiment_id = std::to_string(id);
  c.architecture = r.arch;
  c.loss = r.loss;
  c.dataset = r.dataset;
  c.n1 = r.n1 > 0 ? r.n1 : 1;
  c.batch_size = r.batch;
  c.learning_rate = r.lr;
  c.gd_rate = r.gd;
  return c;
}

std::optional<std::size_t> known_endmember_count(const std::string& dataset) {
  const auto t = lower(dataset);
  if (t.find("samson") != std::string::npos) return 3;
  if (t.find("jasper") != std::string::npos) return 4;
  return std::nullopt;
}

std::size_t GradientTrace::distinct_iterations() const {
  std::set<std::size_t> its;
  for (const auto& r : rows) its.insert(r.iteration);
  return its.size();
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::ReconRmse: return "recon_rmse";
    case Metric::ReconSad: return "recon_sad";
    case Metric::AbundanceRmse: return "abundance_rmse";
    case Metric::EndmemberSad: return "endmember_sad";
  }
  return "?";
}

Metric parse_metric(std::string_view text) {
  const auto t = lower(text);
  if (t == "recon_rmse") return Metric::ReconRmse;
  if (t == "recon_sad") return Metric::ReconSad;
  if (t == "abundance_rmse") return Metric::AbundanceRmse;
  if (t == "endmember_sad") return Metric::EndmemberSad;
  throw ConfigError("unknown metric '" + std::string(text) +
                    "' (expected recon_rmse, recon_sad, abundance_rmse or endmember_sad)");
}

double metric_value(const RunRecord& r, Metric metric) {
  if (r.diverged) return kNaN;
  switch (metric) {
    case Metric::ReconRmse: return r.recon_rmse;
    case Metric::ReconSad: return r.recon_sad;
    case Metric::AbundanceRmse: return r.abundance_rmse.value_or(kNaN);
    case Metric::EndmemberSad: return r.endmember_sad.value_or(kNaN);
  }
  return kNaN;
}

std::uint64_t init_seed_for(std::uint64_t master_seed, std::size_t i) { return mix_seed(master_seed, i); }

std::uint64_t run_seed_for(std::uint64_t master_seed, std::size_t i, std::size_t j) {
  return mix_seed(master_seed, i, j);
}

TrainResult train_once(const ExperimentConfig& config, const HsiBundle& data, std::uint64_t init_seed,
                       std::uint64_t run_seed, const TrainOptions& options) {
  config.validate();
  if (options.require_ground_truth && !data.has_ground_truth())
    throw DataError("quality metrics requested but the dataset has no ground truth");

  const HsiBundle prepared = config.scaling ? min_max_scale(data) : data;
  const Matrix& x = prepared.pixels();
  const std::size_t bands = prepared.bands();
  std::size_t endmembers = 0;
  if (prepared.ground_truth()) {
    endmembers = prepared.ground_truth()->endmember_count();
  } else if (auto e = known_endmember_count(config.dataset)) {
    endmembers = *e;
  } else {
    throw DataError("cannot infer the endmember count: dataset has no ground truth");
  }

  const auto start = std::chrono::steady_clock::now();
  nn::NetworkOptions net_opts;
  net_opts.gd_rate = config.gd_rate;
  net_opts.latent_sigmoid = config.latent_sigmoid;
  nn::Network net = nn::Network::build(config.architecture, bands, endmembers, config.n1, net_opts);
  net.initialize(config.init, init_seed);

  RunRecord rec;
  rec.experiment_id = config.experiment_id;
  rec.init_seed = init_seed;
  rec.run_seed = run_seed;
  rec.init_checksum = net.parameter_checksum();

  GradientTrace trace;
  const auto names = net.parameter_names();
  std::vector<std::pair<std::size_t, std::string>> traced;  // gradient slot, layer label
  for (std::size_t li : net.encoder_linear_indices()) {
    const std::string name = "encoder." + std::to_string(li) + ".weight";
    const auto it = std::find(names.begin(), names.end(), name);
    traced.emplace_back(static_cast<std::size_t>(it - names.begin()), name);
  }

  auto eval_loss = [&](const nn::Network& n) {
    try {
      return compute_loss(config.loss, x, n.reconstruct(x)).value;
    } catch (const DegenerateSpectrumError&) {
      return kNaN;
    }
  };
  rec.initial_loss = eval_loss(net);

  nn::AdamState adam;
  adam.options.learning_rate = config.learning_rate;
  Rng shuffle_rng(mix_seed(run_seed, 1));
  Rng noise_rng(mix_seed(run_seed, 2));

  const std::size_t m = x.cols();
  const std::size_t bs = std::min(config.batch_size, m);
  const bool needs_pairs = has_batch_norm(net);
  if (needs_pairs && m < 2) throw DataError("batch norm training needs at least 2 pixels");

  std::vector<std::size_t> order(m);
  std::size_t iteration = 0;
  bool diverged = false;
  for (std::size_t epoch = 0; epoch < config.effective_epochs() && !diverged; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t begin = 0; begin < m && !diverged; begin += bs) {
      std::size_t end = std::min(m, begin + bs);
      // A trailing single pixel cannot be batch-normalised; fold it in.
      if (needs_pairs && m - end == 1) end = m;
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Matrix batch = x.gather_cols(idx);

      auto fr = net.forward(batch, nn::Mode::Train, noise_rng());
      LossResult loss;
      try {
        loss = compute_loss(config.loss, batch, fr.reconstruction);
      } catch (const DegenerateSpectrumError&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(loss.value)) {
        diverged = true;
        break;
      }
      const nn::Gradients grads = net.backward(fr.cache, loss.grad);

      if (options.trace && (iteration < kDenseTraceIterations || iteration % kSparseTraceStride == 0)) {
        for (const auto& [slot, label] : traced) {
          GradientTraceRow row{iteration, label, 0.0, 0.0};
          mean_std(grads.values[slot], row.mean, row.std);
          trace.rows.push_back(std::move(row));
        }
      }

      std::vector<Matrix*> params;
      for (auto& p : net.parameters()) params.push_back(p.value);
      if (nn::adam_step(params, grads.values, adam) == nn::StepStatus::Diverged) {
        diverged = true;
        break;
      }
      ++iteration;
      if (end == m) break;
    }
  }
  rec.iterations = iteration;

  if (!diverged) {
    const auto params = std::as_const(net).parameters();
    diverged = !std::all_of(params.begin(), params.end(), [](const Matrix* p) { return all_finite(*p); });
  }

  if (!diverged) {
    const Matrix recon = net.reconstruct(x);
    if (!all_finite(recon)) diverged = true;
    if (!diverged) {
      rec.final_loss = eval_loss(net);
      rec.recon_rmse = reconstruction_rmse(x, recon);
      // Finite weights can still overflow the loss; treat that as divergence.
      if (!std::isfinite(rec.recon_rmse)) diverged = true;
      try {
        rec.recon_sad = reconstruction_sad(x, recon);
      } catch (const DegenerateSpectrumError&) {
        rec.recon_sad = kNaN;
      }
    }
    if (!diverged && prepared.ground_truth()) {
      const auto& gt = *prepared.ground_truth();
      const Matrix w_hat = extract_endmembers(net);
      const Matrix a_hat = net.encode(x);
      try {
        const Permutation perm = match_endmembers(w_hat, gt.endmembers);
        rec.permutation = perm;
        rec.abundance_rmse = rmse_abundances(gt.abundances, a_hat, perm);
        rec.abundance_rmse_per_endmember = rmse_abundances_per_endmember(gt.abundances, a_hat, perm);
        rec.endmember_sad = sad_endmembers(gt.endmembers, w_hat, perm);
      } catch (const DegenerateSpectrumError&) {
        // A collapsed decoder column has no direction; leave the scores unset.
      }
    }
  }
  if (diverged) {
    rec.final_loss = rec.recon_rmse = rec.recon_sad = kNaN;
  }
  rec.diverged = diverged;
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(net), std::move(rec), std::move(trace)};
}

namespace {

RunRecord run_cell(const ExperimentConfig& config, const HsiBundle& data, std::size_t cell,
                   const GridOptions& options) {
  const std::size_t i = cell / config.k + 1, j = cell % config.k + 1;
  TrainOptions topts;
  topts.trace = options.trace_dir.has_value();
  auto result = train_once(config, data, init_seed_for(config.master_seed, i),
                           run_seed_for(config.master_seed, i, j), topts);
  result.record.init_id = i;
  result.record.run_id = j;
  if (options.trace_dir) {
    const std::string file = "trace_" + std::to_string(i) + "_" + std::to_string(j) + ".csv";
    write_trace_csv(result.trace, *options.trace_dir / file);
    result.record.trace_file = file;
  }
  return std::move(result.record);
}

void prepare_grid(const ExperimentConfig& config, const GridOptions& options) {
  config.validate();
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);
}

}  // namespace

std::vector<RunRecord> run_experiment_serial(const ExperimentConfig& config, const HsiBundle& data,
                                             const GridOptions& options) {
  prepare_grid(config, options);
  std::vector<RunRecord> records;
  records.reserve(config.N * config.k);
  for (std::size_t cell = 0; cell < config.N * config.k; ++cell) records.push_back(run_cell(config, data, cell, options));
  return records;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const HsiBundle& data,
                                      const GridOptions& options) {
  prepare_grid(config, options);
  const auto cells = static_cast<std::ptrdiff_t>(config.N * config.k);
  std::vector<RunRecord> records(static_cast<std::size_t>(cells));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cells));
  const int jobs = options.jobs > 0 ? options.jobs : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t cell = 0; cell < cells; ++cell) {
    const auto c = static_cast<std::size_t>(cell);
    try {
      records[c] = run_cell(config, data, c, options);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return records;
}

Matrix extract_endmembers(const nn::Network& net) { return net.decoder().weights(); }

Matrix extract_abundances(const nn::Network& net, const HsiBundle& data) { return net.encode(data.pixels()); }

ErrorSummary aggregate_errors(std::span<const RunRecord> records) {
  std::vector<ErrorPair> pairs;
  for (const auto& r : records)
    if (!r.diverged && r.abundance_rmse && r.endmember_sad) pairs.push_back({*r.abundance_rmse, *r.endmember_sad});
  if (pairs.empty()) throw PreconditionError("aggregate_errors: no records with ground-truth errors");
  return aggregate_errors(std::span<const ErrorPair>(pairs));
}

}  // namespace aeunmix
