#pragma once

#include <span>
#include <string>
#include <vector>

#include "aeunmix/matrix.hpp"

namespace aeunmix {

struct LossResult {
  double value = 0.0;
  Matrix grad;  // dL / d(reconstruction)
};

// Mean over all entries of (x - x_hat)^2.
LossResult mse_loss(const Matrix& target, const Matrix& reconstruction);

// Cosine clamp used by the SAD loss; the gradient is zero where it bites.
inline constexpr double kSadCosineClamp = 1e-7;

// Mean per-column spectral angle, arccos of the clamped cosine.
LossResult sad_loss(const Matrix& target, const Matrix& reconstruction);

// mapping[j] is the estimated endmember index matched to reference j.
struct Permutation {
  std::vector<std::size_t> mapping;

  static Permutation identity(std::size_t n);
  std::size_t size() const { return mapping.size(); }
  bool is_bijection() const;
  // "(2,1,3)" style, 1-based.
  std::string to_string() const;
  bool operator==(const Permutation&) const = default;
};

inline constexpr std::size_t kMaxMatchedEndmembers = 10;

// Exhaustive argmin of sum_j SAD(estimated[:, mapping[j]], reference[:, j]);
// the lexicographically smallest mapping wins ties.
Permutation match_endmembers(const Matrix& estimated, const Matrix& reference);

// Pooled RMSE over all E x M entries after reordering estimated rows by perm.
double rmse_abundances(const Matrix& reference, const Matrix& estimated, const Permutation& perm);
// Per-endmember RMSE (row j of reference against row perm[j] of estimate).
std::vector<double> rmse_abundances_per_endmember(const Matrix& reference, const Matrix& estimated,
                                                  const Permutation& perm);

// Mean over j of SAD(estimated[:, perm[j]], reference[:, j]).
double sad_endmembers(const Matrix& reference, const Matrix& estimated, const Permutation& perm);

// Whole-image reconstruction scores.
double reconstruction_rmse(const Matrix& target, const Matrix& reconstruction);
double reconstruction_sad(const Matrix& target, const Matrix& reconstruction);

struct ErrorPair {
  double abundance_rmse = 0.0;
  double endmember_sad = 0.0;
};

struct ErrorSummary {
  double abundance_mean = 0.0;
  double endmember_mean = 0.0;
  double abundance_std = 0.0;  // sample standard deviation, 0 for one record
  double endmember_std = 0.0;
  std::size_t count = 0;
};

ErrorSummary aggregate_errors(std::span<const ErrorPair> errors);

// Two decimals for the mean, one for the spread: "0.07±0.1".
std::string format_mean_std(double mean, double std);

}  // namespace aeunmix
