#include "aeunmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <iomanip>

#include "aeunmix/errors.hpp"
#include "aeunmix/spectral.hpp"

namespace aeunmix {

LossResult mse_loss(const Matrix& target, const Matrix& reconstruction) {
  if (!target.same_shape(reconstruction)) throw DimensionError("mse_loss: shape mismatch");
  const double n = double(target.size());
  LossResult r{0.0, Matrix(target.rows(), target.cols())};
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = reconstruction.values()[i] - target.values()[i];
    r.value += d * d;
    r.grad.values()[i] = 2.0 * d / n;
  }
  r.value /= n;
  return r;
}

LossResult sad_loss(const Matrix& target, const Matrix& reconstruction) {
  if (!target.same_shape(reconstruction)) throw DimensionError("sad_loss: shape mismatch");
  const std::size_t cols = target.cols();
  LossResult r{0.0, Matrix(target.rows(), cols)};
  for (std::size_t c = 0; c < cols; ++c) {
    const auto x = target.col(c);
    const auto y = reconstruction.col(c);
    double dot = 0.0, nx2 = 0.0, ny2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += x[i] * y[i];
      nx2 += x[i] * x[i];
      ny2 += y[i] * y[i];
    }
    if (nx2 == 0.0 || ny2 == 0.0) throw DegenerateSpectrumError("sad_loss: zero-norm column " + std::to_string(c));
    const double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
    const double cosine = dot / (nx * ny);
    const double lo = -1.0 + kSadCosineClamp, hi = 1.0 - kSadCosineClamp;
    const double clamped = std::clamp(cosine, lo, hi);
    r.value += std::acos(clamped);
    if (cosine > lo && cosine < hi) {
      // d acos(c)/dy = -1/sqrt(1-c^2) * (x/(|x||y|) - c y/|y|^2), averaged over columns
      const double k = -1.0 / std::sqrt(1.0 - cosine * cosine) / double(cols);
      auto g = r.grad.col(c);
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = k * (x[i] / (nx * ny) - cosine * y[i] / ny2);
    }
  }
  r.value /= double(cols);
  return r;
}

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.mapping.resize(n);
  std::iota(p.mapping.begin(), p.mapping.end(), std::size_t{0});
  return p;
}

bool Permutation::is_bijection() const {
  std::vector<bool> seen(mapping.size(), false);
  for (std::size_t v : mapping) {
    if (v >= mapping.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::string Permutation::to_string() const {
  std::string s = "(";
  for (std::size_t j = 0; j < mapping.size(); ++j) {
    if (j) s += ',';
    s += std::to_string(mapping[j] + 1);
  }
  return s + ")";
}

Permutation match_endmembers(const Matrix& estimated, const Matrix& reference) {
  if (!estimated.same_shape(reference)) throw DimensionError("match_endmembers: shape mismatch");
  const std::size_t e = reference.cols();
  if (e > kMaxMatchedEndmembers) throw PreconditionError("match_endmembers: E > 10 is out of range for exhaustive search");

  // angle[j][k] = SAD(reference j, estimate k)
  std::vector<std::vector<double>> angle(e, std::vector<double>(e));
  for (std::size_t j = 0; j < e; ++j)
    for (std::size_t k = 0; k < e; ++k) angle[j][k] = spectral_angle(estimated.col(k), reference.col(j));

  Permutation current = Permutation::identity(e);
  Permutation best = current;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t j = 0; j < e; ++j) cost += angle[j][current.mapping[j]];
    if (cost < best_cost) {
      best_cost = cost;
      best = current;
    }
  } while (std::next_permutation(current.mapping.begin(), current.mapping.end()));
  return best;
}

namespace {

void check_perm(const Matrix& reference, const Matrix& estimated, const Permutation& perm, std::size_t e) {
  if (!reference.same_shape(estimated)) throw DimensionError("metric: shape mismatch");
  if (perm.size() != e || !perm.is_bijection()) throw DimensionError("metric: permutation does not match endmember count");
}

}  // namespace

std::vector<double> rmse_abundances_per_endmember(const Matrix& reference, const Matrix& estimated,
                                                  const Permutation& perm) {
  check_perm(reference, estimated, perm, reference.rows());
  std::vector<double> out(reference.rows(), 0.0);
  for (std::size_t j = 0; j < reference.rows(); ++j) {
    double s = 0.0;
    for (std::size_t m = 0; m < reference.cols(); ++m) {
      const double d = reference(j, m) - estimated(perm.mapping[j], m);
      s += d * d;
    }
    out[j] = std::sqrt(s / double(reference.cols()));
  }
  return out;
}

double rmse_abundances(const Matrix& reference, const Matrix& estimated, const Permutation& perm) {
  check_perm(reference, estimated, perm, reference.rows());
  double s = 0.0;
  for (std::size_t m = 0; m < reference.cols(); ++m)
    for (std::size_t j = 0; j < reference.rows(); ++j) {
      const double d = reference(j, m) - estimated(perm.mapping[j], m);
      s += d * d;
    }
  return std::sqrt(s / double(reference.size()));
}

double sad_endmembers(const Matrix& reference, const Matrix& estimated, const Permutation& perm) {
  check_perm(reference, estimated, perm, reference.cols());
  double s = 0.0;
  for (std::size_t j = 0; j < reference.cols(); ++j)
    s += spectral_angle(estimated.col(perm.mapping[j]), reference.col(j));
  return s / double(reference.cols());
}

double reconstruction_rmse(const Matrix& target, const Matrix& reconstruction) {
  return std::sqrt(mse_loss(target, reconstruction).value);
}

double reconstruction_sad(const Matrix& target, const Matrix& reconstruction) {
  if (!target.same_shape(reconstruction)) throw DimensionError("reconstruction_sad: shape mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < target.cols(); ++c) s += spectral_angle(reconstruction.col(c), target.col(c));
  return s / double(target.cols());
}

ErrorSummary aggregate_errors(std::span<const ErrorPair> errors) {
  if (errors.empty()) throw PreconditionError("aggregate_errors: empty record list");
  ErrorSummary s;
  s.count = errors.size();
  for (const auto& e : errors) {
    s.abundance_mean += e.abundance_rmse;
    s.endmember_mean += e.endmember_sad;
  }
  s.abundance_mean /= double(s.count);
  s.endmember_mean /= double(s.count);
  if (s.count > 1) {
    double va = 0.0, ve = 0.0;
    for (const auto& e : errors) {
      va += (e.abundance_rmse - s.abundance_mean) * (e.abundance_rmse - s.abundance_mean);
      ve += (e.endmember_sad - s.endmember_mean) * (e.endmember_sad - s.endmember_mean);
    }
    s.abundance_std = std::sqrt(va / double(s.count - 1));
    s.endmember_std = std::sqrt(ve / double(s.count - 1));
  }
  return s;
}

std::string format_mean_std(double mean, double std) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << mean << "±" << std::setprecision(1) << std;
  return os.str();
}

}  // namespace aeunmix
