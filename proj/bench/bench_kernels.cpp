// Serial vs OpenMP timings for the gemm kernels and the experiment grid.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "aeunmix/harness.hpp"
#include "aeunmix/kernels.hpp"
#include "aeunmix/lmm.hpp"

using namespace aeunmix;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (double& v : m.values()) v = nd(rng);
  return m;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::mt19937_64 rng(7);
  struct Shape {
    std::size_t m, k, n;
  };
  for (const Shape s : {Shape{156, 30, 512}, Shape{198, 36, 2048}, Shape{512, 512, 512}}) {
    const Matrix a = random_matrix(s.m, s.k, rng);
    const Matrix b = random_matrix(s.k, s.n, rng);
    const Matrix at = a.transposed();
    const Matrix bt = b.transposed();
    const int reps = 5;
    volatile double sink = 0.0;
    const double ts = seconds([&] { sink = sink + kernels::serial::matmul(a, b)(0, 0); }, reps);
    const double tp = seconds([&] { sink = sink + kernels::parallel::matmul(a, b)(0, 0); }, reps);
    const double ts_tn = seconds([&] { sink = sink + kernels::serial::matmul_tn(at, b)(0, 0); }, reps);
    const double tp_tn = seconds([&] { sink = sink + kernels::parallel::matmul_tn(at, b)(0, 0); }, reps);
    const double ts_nt = seconds([&] { sink = sink + kernels::serial::matmul_nt(a, bt)(0, 0); }, reps);
    const double tp_nt = seconds([&] { sink = sink + kernels::parallel::matmul_nt(a, bt)(0, 0); }, reps);
    std::printf("gemm %zux%zux%zu  nn %.4fs/%.4fs  tn %.4fs/%.4fs  nt %.4fs/%.4fs  (serial/parallel)\n", s.m, s.k, s.n, ts,
                tp, ts_tn, tp_tn, ts_nt, tp_nt);
  }

  SceneSpec spec;
  spec.width = 20;
  spec.height = 20;
  const HsiBundle scene = make_scene(spec, 1);
  ExperimentConfig cfg;
  cfg.N = 4;
  cfg.k = 2;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-3;
  const double g_serial = seconds([&] { run_experiment_serial(cfg, scene); }, 1);
  const double g_parallel = seconds([&] { run_experiment(cfg, scene); }, 1);
  std::printf("grid 4x2  serial %.3fs  parallel %.3fs\n", g_serial, g_parallel);
}
