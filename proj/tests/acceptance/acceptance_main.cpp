// Acceptance runner: one PASS/FAIL (or SKIP) line per criterion.
//
//   acceptance                     run all criteria
//   acceptance 3 5 9               run a subset
//   acceptance --known-failure=5   still prints FAIL for 5, but it does not
//                                  affect the exit code
//
// Criterion 7 needs AEUNMIX_SAMSON_BUNDLE pointing at a real Samson bundle header.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aeunmix/bundle_io.hpp"
#include "aeunmix/harness.hpp"
#include "aeunmix/lmm.hpp"
#include "aeunmix/metrics.hpp"
#include "aeunmix/nn/layers.hpp"
#include "aeunmix/nn/network.hpp"
#include "aeunmix/records_io.hpp"
#include "aeunmix/stats/rank_tests.hpp"
#include "aeunmix/stats/retry.hpp"
#include "rank_oracles.hpp"
#include "test_util.hpp"

using namespace aeunmix;
using nn::Architecture;
using nn::LayerKind;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome = Outcome::Fail;
  std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

constexpr double kGradTolerance = 1e-5;
constexpr double kGradBudgetSeconds = 30.0;
constexpr std::size_t kGradBatch = 4;
constexpr int kGradDrawsPerCase = 40;
constexpr double kKinkMargin = 1e-3;

double loss_against(const Matrix& y, const Matrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += g.values()[i] * y.values()[i];
  return s;
}

// Worst relative error over dL/dx and every parameter gradient of
// L = sum(G .* layer(x)).
double layer_gradient_error(nn::Layer& layer, Matrix x, std::mt19937_64& rng) {
  constexpr std::uint64_t noise = 17;
  nn::LayerCache cache;
  const Matrix y = layer.forward(x, nn::Mode::Train, noise, cache);
  const Matrix g = testutil::random_matrix(y.rows(), y.cols(), rng);
  std::vector<Matrix> pgrads;
  const Matrix dx = layer.backward(cache, g, pgrads);
  auto loss = [&] {
    nn::LayerCache c;
    return loss_against(layer.forward(x, nn::Mode::Train, noise, c), g);
  };
  double worst = testutil::relative_error(dx, testutil::numeric_grad(x, loss));
  const auto params = layer.parameters();
  for (std::size_t p = 0; p < params.size(); ++p)
    worst = std::max(worst, testutil::relative_error(pgrads[p], testutil::numeric_grad(*params[p], loss)));
  return worst;
}

void push_off(Matrix& x, double kink) {
  for (double& v : x.values())
    if (std::fabs(v - kink) < 0.05) v = kink + (v >= kink ? 0.05 : -0.05);
}

// Randomises every trainable tensor of a freshly built network.
void randomize(nn::Network& net, std::mt19937_64& rng) {
  net.initialize(nn::InitScheme::GlorotUniform, rng());
  for (auto& p : net.parameters()) {
    const auto rows = p.value->rows();
    if (p.name.find("alpha") != std::string::npos) *p.value = testutil::random_matrix(rows, 1, rng, -0.2, 0.2);
    if (p.name.find("gamma") != std::string::npos) *p.value = testutil::random_matrix(rows, 1, rng, 0.5, 1.5);
    if (p.name.find("beta") != std::string::npos) *p.value = testutil::random_matrix(rows, 1, rng, -0.5, 0.5);
    if (p.name.find("bias") != std::string::npos) *p.value = testutil::random_matrix(rows, 1, rng, -0.1, 0.5);
  }
}

// True when some ReLU or soft-threshold input of the train-mode pass lies
// within kKinkMargin of its kink, where finite differences are meaningless,
// or when an abundance column has a single active entry: the encoder
// gradient is then ~1e-11, the size of the finite-difference noise.
bool degenerate_draw(const nn::Network& net, const Matrix& x) {
  nn::Network probe = net;
  Matrix h = x;
  for (const auto& layer : probe.encoder()) {
    if (layer->kind() == LayerKind::ReLU)
      for (double v : h.values())
        if (std::fabs(v) < kKinkMargin) return true;
    if (layer->kind() == LayerKind::SoftThreshold) {
      const Matrix& alpha = *layer->parameters()[0];
      for (std::size_t c = 0; c < h.cols(); ++c)
        for (std::size_t f = 0; f < h.rows(); ++f)
          if (std::fabs(h(f, c) - alpha(f, 0)) < kKinkMargin) return true;
    }
    if (layer->kind() == LayerKind::SumToOne)
      for (std::size_t c = 0; c < h.cols(); ++c) {
        const auto col = h.col(c);
        if (std::count_if(col.begin(), col.end(), [](double v) { return v > kKinkMargin; }) < 2) return true;
      }
    nn::LayerCache cache;
    h = layer->forward(h, nn::Mode::Train, 0, cache);
  }
  return false;
}

double network_gradient_error(nn::Network& net, const Matrix& x, std::uint64_t noise) {
  auto refs = net.parameters();
  auto fr = net.forward(x, nn::Mode::Train, noise);
  const auto analytic = net.backward(fr.cache, mse_loss(x, fr.reconstruction).grad);
  auto loss = [&] { return mse_loss(x, net.forward(x, nn::Mode::Train, noise).reconstruction).value; };
  double worst = 0.0;
  for (std::size_t p = 0; p < refs.size(); ++p)
    worst = std::max(worst, testutil::relative_error(analytic.values[p], testutil::numeric_grad(*refs[p].value, loss)));
  return worst;
}

Verdict criterion_gradients() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> bands_dist(8, 20), e_dist(2, 4);
  std::map<std::string, double> worst;
  auto note = [&](const std::string& name, double err) { worst[name] = std::max(worst[name], err); };

  for (int draw = 0; draw < kGradDrawsPerCase; ++draw) {
    const std::size_t b = bands_dist(rng), e = e_dist(rng);
    for (bool bias : {true, false}) {
      nn::Linear lin(b, e, bias);
      lin.weights() = testutil::random_matrix(e, b, rng);
      if (bias) lin.bias() = testutil::random_matrix(e, 1, rng);
      note(bias ? "linear" : "linear(no bias)", layer_gradient_error(lin, testutil::random_matrix(b, kGradBatch, rng), rng));
    }
    {
      nn::Sigmoid s;
      note("sigmoid", layer_gradient_error(s, testutil::random_matrix(e, kGradBatch, rng, -3, 3), rng));
    }
    {
      nn::ReLU r;
      Matrix x = testutil::random_matrix(e, kGradBatch, rng);
      push_off(x, 0.0);
      note("relu", layer_gradient_error(r, x, rng));
    }
    {
      nn::BatchNorm bn(e);
      *bn.parameters()[0] = testutil::random_matrix(e, 1, rng, 0.5, 1.5);
      *bn.parameters()[1] = testutil::random_matrix(e, 1, rng);
      note("batchnorm", layer_gradient_error(bn, testutil::random_matrix(e, kGradBatch, rng), rng));
    }
    {
      nn::SoftThreshold st(e);
      st.alpha() = testutil::random_matrix(e, 1, rng, -0.3, 0.3);
      Matrix x = testutil::random_matrix(e, kGradBatch, rng);
      for (std::size_t c = 0; c < x.cols(); ++c)
        for (std::size_t f = 0; f < e; ++f)
          if (std::fabs(x(f, c) - st.alpha()(f, 0)) < 0.05) x(f, c) = st.alpha()(f, 0) + 0.1;
      note("softthreshold", layer_gradient_error(st, x, rng));
    }
    {
      nn::SumToOne s;
      note("sumtoone", layer_gradient_error(s, testutil::random_matrix(e, kGradBatch, rng, 0.1, 1.0), rng));
    }
    {
      nn::GaussianDropout d(0.1);
      note("gaussiandropout", layer_gradient_error(d, testutil::random_matrix(e, kGradBatch, rng), rng));
    }
    for (auto arch : {Architecture::Basic, Architecture::Original}) {
      auto net = nn::Network::build(arch, b, e, arch == Architecture::Basic ? 3 : 1, {0.1, true});
      Matrix x;
      do {
        randomize(net, rng);
        x = testutil::random_matrix(b, kGradBatch, rng, 0.05, 0.95);
      } while (degenerate_draw(net, x));
      note(std::string(nn::to_string(arch)) + " network", network_gradient_error(net, x, rng()));
    }
  }

  const double elapsed = seconds_since(start);
  double overall = 0.0;
  std::string detail;
  for (const auto& [name, err] : worst) {
    overall = std::max(overall, err);
    detail += fmt("%s=%.1e ", name.c_str(), err);
  }
  detail += fmt("| max %.2e < %.0e, %.1fs < %.0fs", overall, kGradTolerance, elapsed, kGradBudgetSeconds);
  return verdict(overall < kGradTolerance && elapsed < kGradBudgetSeconds, detail);
}

// ---------------------------------------------------------------- criterion 2

constexpr int kConstraintNetworks = 1000;
constexpr double kNegativeTolerance = -1e-12;
constexpr double kSumTolerance = 1e-6;

Verdict criterion_constraints() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> bands_dist(4, 40), e_dist(2, 6), n1_dist(1, 12), m_dist(2, 32);
  double min_entry = std::numeric_limits<double>::infinity(), worst_sum = 0.0;
  std::size_t columns = 0;
  for (int trial = 0; trial < kConstraintNetworks; ++trial) {
    const auto arch = trial % 2 ? Architecture::Original : Architecture::Basic;
    const std::size_t e = e_dist(rng), b = std::max(bands_dist(rng), e + 1), m = m_dist(rng);
    auto net = nn::Network::build(arch, b, e, n1_dist(rng), {0.2, true});
    randomize(net, rng);
    const Matrix x = testutil::random_matrix(b, m, rng, -1.0, 2.0);
    for (const Matrix& a : {net.encode(x), net.forward(x, nn::Mode::Train, rng()).abundances}) {
      for (std::size_t c = 0; c < a.cols(); ++c) {
        double s = 0.0;
        for (double v : a.col(c)) {
          min_entry = std::min(min_entry, v);
          s += v;
        }
        worst_sum = std::max(worst_sum, std::fabs(s - 1.0));
        ++columns;
      }
    }
  }
  return verdict(min_entry >= kNegativeTolerance && worst_sum <= kSumTolerance,
                 fmt("%d networks, %zu columns, min entry %.2e, max |sum-1| %.2e", kConstraintNetworks, columns,
                     min_entry, worst_sum));
}

// ---------------------------------------------------------------- criterion 3

constexpr double kTextbookH = 7.2;
constexpr double kTextbookP = 0.0273237;
constexpr double kTextbookHTolerance = 1e-9;
constexpr double kTextbookPTolerance = 1e-7;
constexpr double kKruskalPermTolerance = 0.02;
constexpr double kConoverPermTolerance = 0.03;
constexpr int kSmallInstances = 120;
constexpr int kNullSimulations = 2000;
constexpr double kNullLow = 0.03, kNullHigh = 0.07;
constexpr double kStatsBudgetSeconds = 120.0;

stats::GroupedScores as_scores(const oracle::Groups& g) { return stats::GroupedScores{g}; }

oracle::Groups random_small_instance(std::mt19937_64& rng, bool separated) {
  static const std::vector<std::vector<std::size_t>> layouts = {
      {3, 3, 2}, {2, 2, 2, 2}, {3, 2, 3}, {4, 4}, {2, 3, 3}, {3, 3}, {2, 2, 2}, {4, 2, 2}};
  const auto& sizes = layouts[rng() % layouts.size()];
  std::normal_distribution<double> noise(0.0, 1.0);
  oracle::Groups g;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::vector<double> grp;
    for (std::size_t j = 0; j < sizes[i]; ++j) grp.push_back((separated ? 3.0 * double(i) : 0.0) + noise(rng));
    g.push_back(grp);
  }
  return g;
}

Verdict criterion_statistics() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;

  const auto textbook = stats::kruskal_wallis(as_scores({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}));
  const bool textbook_ok = std::fabs(textbook.H - kTextbookH) <= kTextbookHTolerance &&
                           std::fabs(textbook.p - kTextbookP) <= kTextbookPTolerance;
  ok &= textbook_ok;
  detail += fmt("textbook H=%.10f p=%.8f; ", textbook.H, textbook.p);

  std::mt19937_64 rng(3);
  stats::PValueOptions perm{stats::PValueMethod::Permutation, 20000, 0};
  double kw_dev = 0.0, kw_chi2_dev = 0.0, conover_dev = 0.0;
  int conover_cases = 0;
  for (int inst = 0; inst < kSmallInstances; ++inst) {
    const auto g = random_small_instance(rng, inst % 2 == 0);
    perm.seed = rng();
    const double exact = oracle::exact_kw_p(g);
    kw_dev = std::max(kw_dev, std::fabs(stats::kruskal_wallis(as_scores(g), perm).p - exact));
    kw_chi2_dev = std::max(kw_chi2_dev, std::fabs(stats::kruskal_wallis(as_scores(g)).p - exact));
    // Conover only runs after a rejection; keep instances clearly below alpha.
    if (exact < 0.03) {
      stats::ConoverOptions opts;
      opts.pvalues = perm;
      const Matrix p = stats::conover_iman(as_scores(g), opts);
      const auto ref = oracle::exact_conover_p(g);
      std::size_t q = 0;
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j) conover_dev = std::max(conover_dev, std::fabs(p(i, j) - ref[q++]));
      ++conover_cases;
    }
  }
  ok &= kw_dev <= kKruskalPermTolerance && conover_dev <= kConoverPermTolerance && conover_cases > 0;
  detail += fmt("n<=8 exhaustive: KW dev %.4f, Conover dev %.4f (%d cases), chi2-mode KW dev %.4f [info]; ", kw_dev,
                conover_dev, conover_cases, kw_chi2_dev);

  std::mt19937_64 null_rng(2000);
  std::normal_distribution<double> z(0.0, 1.0);
  int rejected = 0;
  for (int sim = 0; sim < kNullSimulations; ++sim) {
    stats::GroupedScores g;
    for (int i = 0; i < 5; ++i) {
      std::vector<double> grp(10);
      for (double& v : grp) v = z(null_rng);
      g.groups.push_back(grp);
    }
    rejected += stats::kruskal_wallis(g).p < 0.05;
  }
  const double rate = double(rejected) / kNullSimulations;
  ok &= rate >= kNullLow && rate <= kNullHigh;
  const double elapsed = seconds_since(start);
  ok &= elapsed < kStatsBudgetSeconds;
  detail += fmt("H0 rejection rate %.4f in [%.2f, %.2f]; %.1fs", rate, kNullLow, kNullHigh, elapsed);
  return verdict(ok, detail);
}

// ---------------------------------------------------------------- criterion 4

// Smallest n with 1 - (1 - p)^n >= c, by direct search.
std::size_t brute_trials(double p, double c) {
  std::size_t n = 1;
  double fail = 1.0 - p;
  while (1.0 - fail < c - 1e-12) {
    fail *= 1.0 - p;
    ++n;
  }
  return n;
}

Verdict criterion_retry() {
  const std::size_t a = stats::required_trials(0.5, 0.95);
  const std::size_t b = stats::required_trials(0.259, 0.95);
  bool ok = a == 5 && b == 10;

  const std::vector<double> confidences = {0.5, 0.8, 0.9, 0.95, 0.99, 0.999};
  std::size_t cells = 0, violations = 0;
  for (std::size_t ci = 0; ci < confidences.size(); ++ci) {
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (int step = 1; step <= 100; ++step) {
      const double p = step / 100.0;
      const std::size_t n = stats::required_trials(p, confidences[ci]);
      ++cells;
      if (n > prev) ++violations;  // non-increasing in p_hat
      if (ci > 0 && n < stats::required_trials(p, confidences[ci - 1])) ++violations;  // non-decreasing in confidence
      if (n != brute_trials(p, confidences[ci])) ++violations;
      prev = n;
    }
  }
  ok &= violations == 0;
  return verdict(ok, fmt("(0.5,0.95)->%zu, (0.259,0.95)->%zu, %zu grid cells, %zu violations", a, b, cells, violations));
}

// ---------------------------------------------------------------- criteria 5 and 9

constexpr std::uint64_t kDeskSceneSeed = 2024;
constexpr std::uint64_t kDeskMasterSeed = 7;
constexpr std::size_t kDeskRetries = 10;
constexpr double kDeskAbundanceRmse = 0.1;
constexpr double kDeskEndmemberSad = 0.15;
constexpr double kDeskBudgetSeconds = 300.0;
constexpr std::size_t kTraceMinIterations = 1000;

SceneSpec desk_scene() {
  SceneSpec s;
  s.name = "desk";
  s.bands = 50;
  s.endmembers = 3;
  s.width = 40;
  s.height = 50;
  s.pure_fraction = 0.1;
  s.sigma = 0.0;
  return s;
}

// Basic architecture, MSE, preset hyperparameters (n1 = 10, batch 4, lr 1e-4,
// default 400 epochs).
ExperimentConfig desk_config() {
  ExperimentConfig c = preset_config(4);
  c.experiment_id = "desk";
  c.dataset = "desk";
  c.init = nn::InitScheme::HeUniform;
  c.N = kDeskRetries;
  c.k = 1;
  c.master_seed = kDeskMasterSeed;
  return c;
}

double selection_score(const RunRecord& r) {
  return r.diverged || !r.abundance_rmse ? std::numeric_limits<double>::infinity() : *r.abundance_rmse;
}

struct DeskOutcome {
  HsiBundle data;
  ExperimentConfig config;
  std::vector<RunRecord> records;
  double seconds = 0.0;
};

std::unique_ptr<DeskOutcome> desk_cache;

const DeskOutcome& desk_run() {
  if (!desk_cache) {
    const auto start = Clock::now();
    auto data = make_scene(desk_scene(), kDeskSceneSeed);
    auto config = desk_config();
    auto records = run_experiment(config, data);
    desk_cache.reset(new DeskOutcome{std::move(data), config, std::move(records), seconds_since(start)});
  }
  return *desk_cache;
}

Verdict criterion_desk_unmixing() {
  const auto& run = desk_run();
  const auto best = std::min_element(run.records.begin(), run.records.end(),
                                     [](const auto& a, const auto& b) { return selection_score(a) < selection_score(b); });
  const double arm = selection_score(*best);
  const double sad = best->endmember_sad.value_or(std::numeric_limits<double>::infinity());
  std::size_t fitted = 0;
  for (const auto& r : run.records) fitted += !r.diverged && r.recon_rmse < 1e-2;
  return verdict(arm < kDeskAbundanceRmse && sad < kDeskEndmemberSad && run.seconds < kDeskBudgetSeconds,
                 fmt("best of %zu: abundance RMSE %.4f (< %.2f), endmember SAD %.4f rad (< %.2f), recon RMSE %.2e; "
                     "%zu/%zu runs reconstruct to < 1e-2; %.1fs < %.0fs",
                     run.records.size(), arm, kDeskAbundanceRmse, sad, kDeskEndmemberSad, best->recon_rmse, fitted,
                     run.records.size(), run.seconds, kDeskBudgetSeconds));
}

Verdict criterion_trace() {
  const auto& run = desk_run();
  const auto worst = std::max_element(run.records.begin(), run.records.end(),
                                      [](const auto& a, const auto& b) { return selection_score(a) < selection_score(b); });
  const auto result = train_once(run.config, run.data, worst->init_seed, worst->run_seed, {true, true});
  const auto dir = testutil::scratch_dir("acceptance_trace");
  const auto path = dir / "trace.csv";
  write_trace_csv(result.trace, path);
  const std::string problem = validate_trace_csv(path);
  const auto reread = read_trace_csv(path);

  std::map<std::string, std::set<std::size_t>> per_layer;
  for (const auto& row : reread.rows)
    if (std::isfinite(row.mean)) per_layer[row.layer].insert(row.iteration);
  std::size_t least = per_layer.empty() ? 0 : std::numeric_limits<std::size_t>::max();
  std::string layers;
  for (const auto& [layer, its] : per_layer) {
    least = std::min(least, its.size());
    layers += layer + " ";
  }
  const bool same_run = result.record.init_checksum == worst->init_checksum;
  std::filesystem::remove_all(dir);
  return verdict(problem.empty() && least >= kTraceMinIterations && per_layer.size() >= 2 && same_run,
                 fmt("worst run (%zu,%zu): %zu traced iterations per layer (>= %zu) for %s| schema %s", worst->init_id,
                     worst->run_id, least, kTraceMinIterations, layers.c_str(),
                     problem.empty() ? "valid" : problem.c_str()));
}

// ---------------------------------------------------------------- criterion 6

constexpr std::uint64_t kStabilitySceneSeed = 11;
constexpr int kStabilitySeeds = 5;
constexpr int kStabilityRequired = 4;
constexpr std::size_t kStabilityInits = 10;
constexpr std::size_t kStabilityRuns = 10;
constexpr std::size_t kStabilityEpochs = 4;
constexpr double kStabilityAlpha = 0.05;
constexpr double kStabilityBudgetSeconds = 1800.0;

Verdict criterion_stability() {
  const auto start = Clock::now();
  const auto data = make_scene(samson_shaped_scene(), kStabilitySceneSeed);
  int rejections = 0;
  std::string detail;
  for (int seed = 1; seed <= kStabilitySeeds; ++seed) {
    ExperimentConfig c = preset_config(4);
    c.experiment_id = "stability";
    c.dataset = data.name();
    c.init = nn::InitScheme::HeUniform;
    c.epochs = kStabilityEpochs;
    c.N = kStabilityInits;
    c.k = kStabilityRuns;
    c.master_seed = static_cast<std::uint64_t>(seed);
    const auto records = run_experiment(c, data);
    const auto report = stats::analyze(records, Metric::ReconRmse, kStabilityAlpha);
    rejections += report.rejected;
    detail += fmt("seed %d p=%.2e; ", seed, report.kruskal.p);
  }
  const double elapsed = seconds_since(start);
  detail += fmt("rejected in %d/%d (>= %d); %.1fs < %.0fs", rejections, kStabilitySeeds, kStabilityRequired, elapsed,
                kStabilityBudgetSeconds);
  return verdict(rejections >= kStabilityRequired && elapsed < kStabilityBudgetSeconds, detail);
}

// ---------------------------------------------------------------- criterion 7

constexpr const char* kSamsonBundleEnv = "AEUNMIX_SAMSON_BUNDLE";
constexpr double kSamsonAbundanceRmse = 0.20;

Verdict criterion_real_samson() {
  const char* path = std::getenv(kSamsonBundleEnv);
  if (path == nullptr || *path == '\0')
    return {Outcome::Skip, fmt("set %s to a Samson bundle header to run", kSamsonBundleEnv)};
  const auto data = load_bundle(path);
  if (!data.has_ground_truth()) return verdict(false, "bundle has no reference abundances");
  ExperimentConfig c = preset_config(3);
  c.N = 5;
  c.k = 5;
  c.init = nn::InitScheme::GlorotUniform;
  const auto records = run_experiment(c, data);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records)
    if (!r.diverged && r.abundance_rmse) {
      sum += *r.abundance_rmse;
      ++n;
    }
  const double mean = n ? sum / double(n) : std::numeric_limits<double>::infinity();
  return verdict(n > 0 && mean <= kSamsonAbundanceRmse,
                 fmt("mean abundance RMSE %.4f over %zu/%zu runs (<= %.2f)", mean, n, records.size(), kSamsonAbundanceRmse));
}

// ---------------------------------------------------------------- criterion 8

std::string records_body(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  std::ostringstream rest;
  rest << in.rdbuf();
  return rest.str();
}

Verdict criterion_determinism() {
  const auto dir = testutil::scratch_dir("acceptance_determinism");
  SceneSpec s;
  s.bands = 24;
  s.width = 12;
  s.height = 10;
  s.sigma = 0.01;
  const auto data = make_scene(s, 5);

  std::size_t compared = 0, mismatched = 0;
  for (auto arch : {Architecture::Basic, Architecture::Original}) {
    ExperimentConfig c;
    c.experiment_id = std::string("det-") + std::string(nn::to_string(arch));
    c.architecture = arch;
    c.loss = arch == Architecture::Basic ? LossKind::MSE : LossKind::SAD;
    c.batch_size = 8;
    c.learning_rate = 1e-2;
    c.gd_rate = arch == Architecture::Original ? 0.1 : 0.0;
    c.epochs = 3;
    c.N = 3;
    c.k = 3;
    c.master_seed = 99;
    const auto a = dir / (c.experiment_id + "_a.jsonl");
    const auto b = dir / (c.experiment_id + "_b.jsonl");
    const auto serial = dir / (c.experiment_id + "_serial.jsonl");
    write_records(run_experiment(c, data), c, a);
    write_records(run_experiment(c, data), c, b);
    write_records(run_experiment_serial(c, data), c, serial);
    const std::string ref = records_body(a);
    for (const auto& other : {b, serial}) {
      ++compared;
      mismatched += ref.empty() || records_body(other) != ref;
    }
  }
  std::filesystem::remove_all(dir);
  return verdict(mismatched == 0, fmt("%zu record-file pairs compared past the meta line, %zu differ", compared, mismatched));
}

struct Criterion {
  int id;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", criterion_gradients},
      {2, "abundance constraints", criterion_constraints},
      {3, "statistics oracle", criterion_statistics},
      {4, "retry planner", criterion_retry},
      {5, "desk-scale unmixing", criterion_desk_unmixing},
      {6, "stability phenomenon", criterion_stability},
      {7, "real Samson check", criterion_real_samson},
      {8, "determinism", criterion_determinism},
      {9, "gradient-trace diagnostics", criterion_trace},
  };

  std::set<int> selected, known_failures;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string flag = "--known-failure=";
    if (arg.rfind(flag, 0) == 0)
      known_failures.insert(std::atoi(arg.c_str() + flag.size()));
    else
      selected.insert(std::atoi(arg.c_str()));
  }

  int passed = 0, failed = 0, known = 0, skipped = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Verdict v;
    const auto start = Clock::now();
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = verdict(false, std::string("exception: ") + e.what());
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Skip ? "SKIP" : "FAIL";
    switch (v.outcome) {
      case Outcome::Pass: ++passed; break;
      case Outcome::Skip: ++skipped; break;
      case Outcome::Fail: ++(known_failures.count(c.id) ? known : failed); break;
    }
    std::cout << tag << " criterion " << c.id << " (" << c.title << "): " << v.detail
              << fmt(" [%.1fs]", seconds_since(start)) << std::endl;
  }
  std::cout << fmt("summary: %d passed, %d failed, %d known failures, %d skipped", passed, failed + known, known, skipped)
            << std::endl;
  return failed == 0 ? 0 : 1;
}
