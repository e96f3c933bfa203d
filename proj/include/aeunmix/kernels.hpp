#pragma once

#include "aeunmix/matrix.hpp"

// Dense products used by the network and the scene generator.
//
// Every kernel has a serial reference in `serial::` and an OpenMP version in
// `parallel::`. Both evaluate each output entry with the same accumulation
// order, so they agree bit for bit; the parallel form only splits output
// columns across threads. The unqualified entry points pick one based on size
// and whether the caller already runs inside a parallel region.
namespace aeunmix::kernels {

namespace serial {
// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
}  // namespace serial

namespace parallel {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
}  // namespace parallel

// Multiply-add count above which the dispatcher goes parallel.
inline constexpr double kParallelWorkThreshold = 2.0e5;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

}  // namespace aeunmix::kernels
