#include "aeunmix/kernels.hpp"

#include <omp.h>

#include "aeunmix/errors.hpp"

namespace aeunmix::kernels {
namespace {

void check_nn(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
}
void check_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: row counts differ");
}
void check_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: column counts differ");
}

// Column j of C = A * B.
inline void nn_column(const Matrix& a, const Matrix& b, Matrix& c, std::size_t j) {
  const std::size_t m = a.rows();
  double* out = c.data() + j * m;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double bkj = b(k, j);
    const double* acol = a.data() + k * m;
    for (std::size_t i = 0; i < m; ++i) out[i] += acol[i] * bkj;
  }
}

// Column j of C = A^T * B; each entry is a dot product of two columns.
inline void tn_column(const Matrix& a, const Matrix& b, Matrix& c, std::size_t j) {
  const std::size_t n = a.rows();
  const double* bcol = b.data() + j * n;
  for (std::size_t i = 0; i < a.cols(); ++i) {
    const double* acol = a.data() + i * n;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += acol[k] * bcol[k];
    c(i, j) = s;
  }
}

// Column j of C = A * B^T.
inline void nt_column(const Matrix& a, const Matrix& b, Matrix& c, std::size_t j) {
  const std::size_t m = a.rows();
  double* out = c.data() + j * m;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double bjk = b(j, k);
    const double* acol = a.data() + k * m;
    for (std::size_t i = 0; i < m; ++i) out[i] += acol[i] * bjk;
  }
}

bool go_parallel(double work) {
  return work >= kParallelWorkThreshold && !omp_in_parallel() && omp_get_max_threads() > 1;
}

}  // namespace

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_nn(a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) nn_column(a, b, c, j);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_tn(a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) tn_column(a, b, c, j);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_nt(a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t j = 0; j < b.rows(); ++j) nt_column(a, b, c, j);
  return c;
}

}  // namespace serial

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_nn(a, b);
  Matrix c(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(b.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) nn_column(a, b, c, static_cast<std::size_t>(j));
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_tn(a, b);
  Matrix c(a.cols(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(b.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) tn_column(a, b, c, static_cast<std::size_t>(j));
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_nt(a, b);
  Matrix c(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(b.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) nt_column(a, b, c, static_cast<std::size_t>(j));
  return c;
}

}  // namespace parallel

Matrix matmul(const Matrix& a, const Matrix& b) {
  const double work = double(a.rows()) * double(a.cols()) * double(b.cols());
  return go_parallel(work) ? parallel::matmul(a, b) : serial::matmul(a, b);
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  const double work = double(a.rows()) * double(a.cols()) * double(b.cols());
  return go_parallel(work) ? parallel::matmul_tn(a, b) : serial::matmul_tn(a, b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  const double work = double(a.rows()) * double(a.cols()) * double(b.rows());
  return go_parallel(work) ? parallel::matmul_nt(a, b) : serial::matmul_nt(a, b);
}

}  // namespace aeunmix::kernels
