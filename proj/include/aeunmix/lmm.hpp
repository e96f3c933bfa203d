#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeunmix/matrix.hpp"

namespace aeunmix {

// Tolerance for the abundance sum-to-one constraint on stored ground truth.
inline constexpr double kAbundanceSumTolerance = 1e-6;

// Reference endmembers W (B x E) and abundances A (E x M).
struct GroundTruth {
  Matrix endmembers;
  Matrix abundances;

  std::size_t endmember_count() const { return endmembers.cols(); }
  // Throws DimensionError or PreconditionError on violated invariants.
  void validate() const;
};

struct NoiseSpec {
  double sigma = 0.0;
};

// B x M pixel matrix (band-major columns) with optional reference data.
// Immutable once built; the constructor checks every invariant.
class HsiBundle {
 public:
  HsiBundle(std::string name, Matrix pixels,
            std::optional<GroundTruth> ground_truth = std::nullopt,
            std::optional<std::size_t> width = std::nullopt,
            std::optional<std::size_t> height = std::nullopt,
            bool min_max_scaled = false);

  const std::string& name() const { return name_; }
  const Matrix& pixels() const { return pixels_; }
  std::size_t bands() const { return pixels_.rows(); }
  std::size_t pixel_count() const { return pixels_.cols(); }
  std::optional<std::size_t> width() const { return width_; }
  std::optional<std::size_t> height() const { return height_; }
  const std::optional<GroundTruth>& ground_truth() const { return ground_truth_; }
  bool has_ground_truth() const { return ground_truth_.has_value(); }
  bool min_max_scaled() const { return min_max_scaled_; }

  HsiBundle with_spatial(std::size_t width, std::size_t height) const;
  HsiBundle with_name(std::string name) const;

 private:
  std::string name_;
  Matrix pixels_;
  std::optional<GroundTruth> ground_truth_;
  std::optional<std::size_t> width_;
  std::optional<std::size_t> height_;
  bool min_max_scaled_ = false;
};

// X = W A + N with N_ij ~ N(0, sigma^2) i.i.d. from `seed`.
HsiBundle synthesize(const Matrix& endmembers, const Matrix& abundances,
                     NoiseSpec noise, std::uint64_t seed,
                     std::string name = "synthetic");

// Dirichlet(concentration) columns; an evenly spread pure_fraction share of the
// columns is replaced by unit vectors e_1, e_2, ..., e_E, e_1, ...
Matrix sample_abundances(std::size_t endmembers, std::size_t pixels,
                         const std::vector<double>& concentration,
                         double pure_fraction, std::uint64_t seed);

inline constexpr double kMinEndmemberSeparation = 0.15;  // radians
inline constexpr int kEndmemberRetries = 100;
inline constexpr double kReflectanceLow = 0.05;
inline constexpr double kReflectanceHigh = 0.95;

// Smooth random positive spectra in [0.05, 0.95], pairwise SAD >= 0.15 rad.
Matrix generate_endmembers(std::size_t bands, std::size_t endmembers,
                           std::size_t smoothness, std::uint64_t seed);

struct SceneSpec {
  std::string name = "synthetic";
  std::size_t bands = 50;
  std::size_t endmembers = 3;
  std::size_t width = 40;
  std::size_t height = 50;
  double pure_fraction = 0.1;
  std::vector<double> concentration;  // empty: all ones
  std::size_t smoothness = 9;
  double sigma = 0.0;

  std::size_t pixels() const { return width * height; }
};

// Scenes with the dimensions of the two public benchmark images.
SceneSpec samson_shaped_scene();
SceneSpec jasper_shaped_scene();

// Endmembers, abundances and noise all derived from one seed.
HsiBundle make_scene(const SceneSpec& spec, std::uint64_t seed);

// Global min-max scaling of the pixels to [0, 1]. Reference endmembers get the
// same affine map, which keeps X = W A exact because abundances sum to one.
HsiBundle min_max_scale(const HsiBundle& bundle);

}  // namespace aeunmix
