#include "aeunmix/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aeunmix/errors.hpp"
#include "aeunmix/kernels.hpp"
#include "aeunmix/seeding.hpp"
#include "aeunmix/spectral.hpp"

namespace aeunmix {

double spectral_angle(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spectral_angle: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateSpectrumError("spectral_angle: zero-norm spectrum");
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return std::acos(cosine);
}

void GroundTruth::validate() const {
  if (endmembers.cols() < 2) throw PreconditionError("ground truth needs at least 2 endmembers");
  if (abundances.rows() != endmembers.cols())
    throw DimensionError("ground truth: abundance rows != endmember count");
  if (!all_finite(endmembers) || !all_finite(abundances))
    throw PreconditionError("ground truth contains non-finite values");
  for (std::size_t m = 0; m < abundances.cols(); ++m) {
    double s = 0.0;
    for (double v : abundances.col(m)) {
      if (v < 0.0) throw PreconditionError("ground truth: negative abundance");
      s += v;
    }
    if (std::abs(s - 1.0) > kAbundanceSumTolerance)
      throw PreconditionError("ground truth: abundance column " + std::to_string(m) +
                              " sums to " + std::to_string(s));
  }
}

HsiBundle::HsiBundle(std::string name, Matrix pixels, std::optional<GroundTruth> ground_truth,
                     std::optional<std::size_t> width, std::optional<std::size_t> height,
                     bool min_max_scaled)
    : name_(std::move(name)),
      pixels_(std::move(pixels)),
      ground_truth_(std::move(ground_truth)),
      width_(width),
      height_(height),
      min_max_scaled_(min_max_scaled) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) throw DimensionError("bundle needs B >= 1 and M >= 1");
  if (!all_finite(pixels_)) throw PreconditionError("bundle pixels must be finite");
  if (width_.has_value() != height_.has_value())
    throw DimensionError("bundle: width and height must be given together");
  if (width_ && *width_ * *height_ != pixels_.cols())
    throw DimensionError("bundle: width*height != pixel count");
  if (ground_truth_) {
    ground_truth_->validate();
    if (ground_truth_->endmembers.rows() != pixels_.rows())
      throw DimensionError("ground truth endmember length != band count");
    if (ground_truth_->abundances.cols() != pixels_.cols())
      throw DimensionError("ground truth abundance count != pixel count");
  }
}

HsiBundle HsiBundle::with_spatial(std::size_t width, std::size_t height) const {
  return HsiBundle(name_, pixels_, ground_truth_, width, height, min_max_scaled_);
}

HsiBundle HsiBundle::with_name(std::string name) const {
  return HsiBundle(std::move(name), pixels_, ground_truth_, width_, height_, min_max_scaled_);
}

HsiBundle synthesize(const Matrix& endmembers, const Matrix& abundances, NoiseSpec noise,
                     std::uint64_t seed, std::string name) {
  if (endmembers.cols() != abundances.rows())
    throw DimensionError("synthesize: W has " + std::to_string(endmembers.cols()) +
                         " columns but A has " + std::to_string(abundances.rows()) + " rows");
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
    throw PreconditionError("noise sigma must be finite and >= 0");
  GroundTruth gt{endmembers, abundances};
  gt.validate();

  Matrix pixels = kernels::matmul(endmembers, abundances);
  if (noise.sigma > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> n01(0.0, noise.sigma);
    for (double& v : pixels.values()) v += n01(rng);
  }
  return HsiBundle(std::move(name), std::move(pixels), std::move(gt));
}

Matrix sample_abundances(std::size_t endmembers, std::size_t pixels,
                         const std::vector<double>& concentration, double pure_fraction,
                         std::uint64_t seed) {
  if (endmembers < 2) throw PreconditionError("sample_abundances: E must be >= 2");
  if (pixels < 1) throw PreconditionError("sample_abundances: M must be >= 1");
  if (concentration.size() != endmembers)
    throw DimensionError("sample_abundances: concentration length != E");
  if (!std::all_of(concentration.begin(), concentration.end(), [](double a) { return a > 0.0; }))
    throw PreconditionError("sample_abundances: concentration entries must be > 0");
  if (!(pure_fraction >= 0.0 && pure_fraction <= 1.0))
    throw PreconditionError("sample_abundances: pure_fraction must lie in [0, 1]");

  Rng rng(seed);
  std::vector<std::gamma_distribution<double>> gammas;
  for (double a : concentration) gammas.emplace_back(a, 1.0);

  Matrix a(endmembers, pixels);
  for (std::size_t m = 0; m < pixels; ++m) {
    auto col = a.col(m);
    double s = 0.0;
    for (std::size_t e = 0; e < endmembers; ++e) s += col[e] = gammas[e](rng);
    if (s <= 0.0) {
      // All gamma draws underflowed; fall back to the simplex centre.
      std::fill(col.begin(), col.end(), 1.0 / double(endmembers));
    } else {
      for (double& v : col) v /= s;
    }
  }

  const auto pure = static_cast<std::size_t>(std::llround(pure_fraction * double(pixels)));
  for (std::size_t t = 0; t < pure; ++t) {
    const std::size_t m = t * pixels / pure;
    auto col = a.col(m);
    std::fill(col.begin(), col.end(), 0.0);
    col[t % endmembers] = 1.0;
  }
  return a;
}

namespace {

std::vector<double> smooth_curve(std::size_t bands, std::size_t window, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> raw(bands);
  for (double& v : raw) v = u(rng);

  // Centred moving average, truncated at the edges.
  std::vector<double> out(bands);
  const auto half_lo = static_cast<std::ptrdiff_t>((window - 1) / 2);
  const auto half_hi = static_cast<std::ptrdiff_t>(window / 2);
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(bands); ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - half_lo);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(bands) - 1, i + half_hi);
    double s = 0.0;
    for (auto k = lo; k <= hi; ++k) s += raw[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = s / double(hi - lo + 1);
  }

  const auto [mn, mx] = std::minmax_element(out.begin(), out.end());
  const double lo = *mn, span = *mx - *mn;
  for (double& v : out)
    v = span > 0.0 ? kReflectanceLow + (v - lo) / span * (kReflectanceHigh - kReflectanceLow)
                   : 0.5 * (kReflectanceLow + kReflectanceHigh);
  return out;
}

}  // namespace

Matrix generate_endmembers(std::size_t bands, std::size_t endmembers, std::size_t smoothness,
                           std::uint64_t seed) {
  if (endmembers < 2 || bands <= endmembers)
    throw PreconditionError("generate_endmembers: need B > E >= 2");
  if (smoothness < 1) throw PreconditionError("generate_endmembers: smoothness must be >= 1");

  Rng rng(seed);
  for (int attempt = 0; attempt < kEndmemberRetries; ++attempt) {
    Matrix w(bands, endmembers);
    for (std::size_t e = 0; e < endmembers; ++e) {
      const auto curve = smooth_curve(bands, smoothness, rng);
      std::copy(curve.begin(), curve.end(), w.col(e).begin());
    }
    bool separated = true;
    for (std::size_t i = 0; i < endmembers && separated; ++i)
      for (std::size_t j = i + 1; j < endmembers && separated; ++j)
        separated = spectral_angle(w.col(i), w.col(j)) >= kMinEndmemberSeparation;
    if (separated) return w;
  }
  throw SeparationError("generate_endmembers: no separated endmember set after " +
                        std::to_string(kEndmemberRetries) + " attempts");
}

SceneSpec samson_shaped_scene() {
  SceneSpec s;
  s.name = "samson-shaped";
  s.bands = 156;
  s.endmembers = 3;
  s.width = 95;
  s.height = 95;
  return s;
}

SceneSpec jasper_shaped_scene() {
  SceneSpec s;
  s.name = "jasper-shaped";
  s.bands = 198;
  s.endmembers = 4;
  s.width = 100;
  s.height = 100;
  return s;
}

HsiBundle make_scene(const SceneSpec& spec, std::uint64_t seed) {
  const Matrix w = generate_endmembers(spec.bands, spec.endmembers, spec.smoothness,
                                       mix_seed(seed, 1));
  std::vector<double> conc = spec.concentration;
  if (conc.empty()) conc.assign(spec.endmembers, 1.0);
  const Matrix a = sample_abundances(spec.endmembers, spec.pixels(), conc, spec.pure_fraction,
                                     mix_seed(seed, 2));
  return synthesize(w, a, NoiseSpec{spec.sigma}, mix_seed(seed, 3), spec.name)
      .with_spatial(spec.width, spec.height);
}

HsiBundle min_max_scale(const HsiBundle& bundle) {
  const auto& v = bundle.pixels().values();
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn, span = *mx - *mn;
  if (span <= 0.0) throw DataError("min_max_scale: constant image cannot be scaled");

  auto scale = [&](Matrix m) {
    for (double& x : m.values()) x = (x - lo) / span;
    return m;
  };
  std::optional<GroundTruth> gt;
  if (bundle.ground_truth())
    gt = GroundTruth{scale(bundle.ground_truth()->endmembers), bundle.ground_truth()->abundances};
  std::optional<std::size_t> w = bundle.width(), h = bundle.height();
  return HsiBundle(bundle.name(), scale(bundle.pixels()), std::move(gt), w, h, true);
}

}  // namespace aeunmix
