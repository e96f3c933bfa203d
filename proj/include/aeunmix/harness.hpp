#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aeunmix/lmm.hpp"
#include "aeunmix/metrics.hpp"
#include "aeunmix/nn/network.hpp"

namespace aeunmix {

enum class LossKind { MSE, SAD };

std::string_view to_string(LossKind loss);
LossKind parse_loss(std::string_view text);

// One training configuration plus the N x k grid it is repeated over.
struct ExperimentConfig {
  std::string experiment_id = "custom";
  nn::Architecture architecture = nn::Architecture::Basic;
  LossKind loss = LossKind::MSE;
  std::string dataset;           // bundle header path or label
  std::size_t n1 = 10;           // basic encoder width multiplier ("10E")
  std::size_t batch_size = 4;
  double learning_rate = 1e-4;
  double gd_rate = 0.0;
  std::size_t epochs = 0;        // 0 selects the architecture default
  nn::InitScheme init = nn::InitScheme::GlorotUniform;
  std::size_t N = 1;             // initialisations
  std::size_t k = 1;             // runs per initialisation
  std::uint64_t master_seed = 0;
  bool scaling = false;          // global min-max scaling of pixels
  bool latent_sigmoid = true;

  static constexpr std::size_t kDefaultEpochsOriginal = 100;
  static constexpr std::size_t kDefaultEpochsBasic = 400;

  std::size_t effective_epochs() const;
  // Throws ConfigError on violated invariants.
  void validate() const;
};

// Built-in presets 1-10. `dataset` is set to "samson" or "jasper".
ExperimentConfig preset_config(int experiment_id);

// Number of endmembers the dataset label implies, if it is a known one.
std::optional<std::size_t> known_endmember_count(const std::string& dataset);

struct GradientTraceRow {
  std::size_t iteration = 0;
  std::string layer;
  double mean = 0.0;
  double std = 0.0;
};

struct GradientTrace {
  std::vector<GradientTraceRow> rows;

  std::size_t distinct_iterations() const;
};

// Every iteration below this is traced, afterwards every 100th.
inline constexpr std::size_t kDenseTraceIterations = 1000;
inline constexpr std::size_t kSparseTraceStride = 100;

struct RunRecord {
  std::string experiment_id;
  std::size_t init_id = 0;  // 1-based
  std::size_t run_id = 0;   // 1-based
  std::uint64_t init_seed = 0;
  std::uint64_t run_seed = 0;
  std::uint64_t init_checksum = 0;  // weights right after initialisation
  double initial_loss = 0.0;        // full-image eval loss before training
  double final_loss = 0.0;          // full-image eval loss after training
  double recon_rmse = 0.0;
  double recon_sad = 0.0;
  std::optional<double> abundance_rmse;
  std::optional<double> endmember_sad;
  std::vector<double> abundance_rmse_per_endmember;
  std::optional<Permutation> permutation;
  bool diverged = false;
  std::size_t iterations = 0;
  double wall_time_s = 0.0;
  std::string trace_file;
};

enum class Metric { ReconRmse, ReconSad, AbundanceRmse, EndmemberSad };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);
// NaN when the record has no such value or diverged.
double metric_value(const RunRecord& record, Metric metric);

struct TrainOptions {
  bool trace = true;
  bool require_ground_truth = false;
};

struct TrainResult {
  nn::Network network;
  RunRecord record;
  GradientTrace trace;
};

// Weights come from init_seed alone; batch order (mix(run_seed, 1)) and
// dropout noise (mix(run_seed, 2)) from run_seed alone.
TrainResult train_once(const ExperimentConfig& config, const HsiBundle& data, std::uint64_t init_seed,
                       std::uint64_t run_seed, const TrainOptions& options = {});

// Seeds of grid cell (i, j), both 1-based.
std::uint64_t init_seed_for(std::uint64_t master_seed, std::size_t i);
std::uint64_t run_seed_for(std::uint64_t master_seed, std::size_t i, std::size_t j);

struct GridOptions {
  int jobs = 0;                                   // 0: OpenMP default
  std::optional<std::filesystem::path> trace_dir; // write trace_<i>_<j>.csv per cell
};

// N x k grid, cells scheduled over OpenMP threads; records come back in
// (i, j) lexicographic order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const HsiBundle& data,
                                      const GridOptions& options = {});
// Single-threaded reference of run_experiment.
std::vector<RunRecord> run_experiment_serial(const ExperimentConfig& config, const HsiBundle& data,
                                             const GridOptions& options = {});

// Decoder weight matrix, B x E; its columns are the endmember estimates.
Matrix extract_endmembers(const nn::Network& net);
// Eval-mode sum-to-one activations, E x M.
Matrix extract_abundances(const nn::Network& net, const HsiBundle& data);

// Abundance and endmember error summaries over non-diverged records with ground truth.
ErrorSummary aggregate_errors(std::span<const RunRecord> records);

}  // namespace aeunmix
