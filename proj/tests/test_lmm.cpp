#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "aeunmix/errors.hpp"
#include "aeunmix/lmm.hpp"
#include "aeunmix/spectral.hpp"
#include "test_util.hpp"

using namespace aeunmix;

namespace {

Matrix random_abundances(std::size_t e, std::size_t m, std::mt19937_64& rng) {
  Matrix a = testutil::random_matrix(e, m, rng, 0.0, 1.0);
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0.0;
    for (double v : a.col(c)) s += v;
    for (double& v : a.col(c)) v /= s;
  }
  return a;
}

double total_variation(std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) s += std::fabs(v[i] - v[i - 1]);
  return s;
}

TEST(Synthesize, PurePixelEqualsEndmember) {
  std::mt19937_64 rng(1);
  const Matrix w = testutil::random_matrix(8, 3, rng, 0.1, 0.9);
  Matrix a(3, 3);
  for (std::size_t j = 0; j < 3; ++j) a(j, j) = 1.0;
  const auto b = synthesize(w, a, {0.0}, 5);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t r = 0; r < 8; ++r) EXPECT_EQ(b.pixels()(r, j), w(r, j));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(spectral_angle(b.pixels().col(j), w.col(j)), 0.0, 1e-7);
}

TEST(Synthesize, ZeroEndmembersGiveZeroPixels) {
  std::mt19937_64 rng(2);
  const auto b = synthesize(Matrix(8, 3), random_abundances(3, 10, rng), {0.0}, 1);
  for (double v : b.pixels().values()) EXPECT_EQ(v, 0.0);
}

TEST(Synthesize, MatchesTripleLoopProduct) {
  std::mt19937_64 rng(3);
  const Matrix w = testutil::random_matrix(8, 3, rng, 0.0, 1.0);
  const Matrix a = random_abundances(3, 16, rng);
  const auto b = synthesize(w, a, {0.0}, 9);
  EXPECT_LT(max_abs_diff(b.pixels(), testutil::naive_matmul(w, a)), 1e-14);
  ASSERT_TRUE(b.ground_truth());
  EXPECT_EQ(b.ground_truth()->endmembers, w);
  EXPECT_EQ(b.ground_truth()->abundances, a);
}

TEST(Synthesize, LinearInAbundances) {
  std::mt19937_64 rng(4);
  const Matrix w = testutil::random_matrix(10, 4, rng, 0.0, 1.0);
  const Matrix a1 = random_abundances(4, 20, rng);
  const Matrix a2 = random_abundances(4, 20, rng);
  for (double t : {0.0, 0.25, 0.7, 1.0}) {
    const Matrix mixed = t * a1 + (1.0 - t) * a2;
    const Matrix lhs = synthesize(w, mixed, {0.0}, 1).pixels();
    const Matrix rhs = t * synthesize(w, a1, {0.0}, 1).pixels() + (1.0 - t) * synthesize(w, a2, {0.0}, 1).pixels();
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-12);
  }
}

TEST(Synthesize, NoiseIsSeededAndScaled) {
  std::mt19937_64 rng(5);
  const Matrix w = testutil::random_matrix(50, 3, rng, 0.0, 1.0);
  const Matrix a = random_abundances(3, 2000, rng);
  const auto n1 = synthesize(w, a, {0.05}, 11);
  const auto n2 = synthesize(w, a, {0.05}, 11);
  const auto n3 = synthesize(w, a, {0.05}, 12);
  EXPECT_EQ(n1.pixels(), n2.pixels());
  EXPECT_NE(n1.pixels(), n3.pixels());
  const Matrix resid = n1.pixels() - testutil::naive_matmul(w, a);
  double ss = 0.0;
  for (double v : resid.values()) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / double(resid.size())), 0.05, 0.002);
}

TEST(Synthesize, DimensionMismatchRejected) {
  EXPECT_THROW(synthesize(Matrix(8, 3), Matrix(2, 4, 0.5), {0.0}, 1), DimensionError);
}

TEST(Synthesize, NegativeSigmaRejected) {
  Matrix a(2, 1);
  a(0, 0) = 1.0;
  EXPECT_THROW(synthesize(Matrix(4, 2, 0.3), a, {-1.0}, 1), PreconditionError);
}

TEST(SampleAbundances, AllPureCyclesUnitVectors) {
  const Matrix a = sample_abundances(3, 6, {1, 1, 1}, 1.0, 7);
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(a(r, c), r == c % 3 ? 1.0 : 0.0);
}

TEST(SampleAbundances, ColumnsOnSimplex) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = sample_abundances(4, 500, {0.5, 1, 2, 3}, 0.1, seed);
    for (std::size_t c = 0; c < a.cols(); ++c) {
      double s = 0.0;
      for (double v : a.col(c)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(SampleAbundances, DirichletMean) {
  const std::size_t m = 100000;
  const Matrix a = sample_abundances(3, m, {1, 1, 1}, 0.0, 42);
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += a(r, c);
    EXPECT_NEAR(s / double(m), 1.0 / 3.0, 0.01);
  }
  const Matrix b = sample_abundances(2, m, {1, 3}, 0.0, 43);
  double s = 0.0;
  for (std::size_t c = 0; c < m; ++c) s += b(1, c);
  EXPECT_NEAR(s / double(m), 0.75, 0.01);
}

TEST(SampleAbundances, PureShareAndDeterminism) {
  const Matrix a = sample_abundances(3, 1000, {1, 1, 1}, 0.1, 8);
  std::size_t pure = 0;
  for (std::size_t c = 0; c < a.cols(); ++c)
    for (double v : a.col(c))
      if (v == 1.0) ++pure;
  EXPECT_EQ(pure, 100u);
  EXPECT_EQ(a, sample_abundances(3, 1000, {1, 1, 1}, 0.1, 8));
}

TEST(SampleAbundances, BadArgumentsRejected) {
  EXPECT_THROW(sample_abundances(1, 5, {1}, 0.0, 1), PreconditionError);
  EXPECT_THROW(sample_abundances(3, 0, {1, 1, 1}, 0.0, 1), PreconditionError);
  EXPECT_THROW(sample_abundances(3, 5, {1, 0, 1}, 0.0, 1), PreconditionError);
  EXPECT_ANY_THROW(sample_abundances(3, 5, {1, 1}, 0.0, 1));
}

TEST(GenerateEndmembers, RangeAndSeparation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix w = generate_endmembers(50, seed % 2 ? 2 : 4, 9, seed);
    for (double v : w.values()) {
      EXPECT_GE(v, kReflectanceLow - 1e-12);
      EXPECT_LE(v, kReflectanceHigh + 1e-12);
    }
    for (std::size_t i = 0; i < w.cols(); ++i)
      for (std::size_t j = i + 1; j < w.cols(); ++j) EXPECT_GE(spectral_angle(w.col(i), w.col(j)), 0.15);
  }
}

TEST(GenerateEndmembers, WiderWindowLowersTotalVariation) {
  double prev = 1e300;
  for (std::size_t window : {1, 5, 15}) {
    double tv = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix w = generate_endmembers(100, 3, window, seed);
      for (std::size_t c = 0; c < 3; ++c) tv += total_variation(w.col(c));
    }
    EXPECT_LT(tv, prev) << "window " << window;
    prev = tv;
  }
}

TEST(GenerateEndmembers, Deterministic) {
  EXPECT_EQ(generate_endmembers(30, 3, 5, 99), generate_endmembers(30, 3, 5, 99));
  EXPECT_NE(generate_endmembers(30, 3, 5, 99), generate_endmembers(30, 3, 5, 100));
}

TEST(GenerateEndmembers, BadArgumentsRejected) {
  EXPECT_THROW(generate_endmembers(3, 3, 1, 0), PreconditionError);
  EXPECT_THROW(generate_endmembers(10, 1, 1, 0), PreconditionError);
  EXPECT_THROW(generate_endmembers(10, 2, 0, 0), PreconditionError);
}

TEST(HsiBundle, InvariantsEnforced) {
  EXPECT_THROW(HsiBundle("x", Matrix(0, 3)), DimensionError);
  Matrix bad(2, 2, 1.0);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(HsiBundle("x", bad), PreconditionError);
  EXPECT_THROW(HsiBundle("x", Matrix(2, 6, 1.0), std::nullopt, 2, 2), DimensionError);
  EXPECT_NO_THROW(HsiBundle("x", Matrix(2, 6, 1.0), std::nullopt, 2, 3));
}

TEST(GroundTruth, ConstraintsEnforced) {
  Matrix a(2, 2, 0.5);
  GroundTruth ok{Matrix(4, 2, 0.3), a};
  EXPECT_NO_THROW(ok.validate());
  a(0, 0) = 0.6;
  EXPECT_THROW((GroundTruth{Matrix(4, 2, 0.3), a}.validate()), PreconditionError);
  Matrix neg(2, 1);
  neg(0, 0) = 1.2;
  neg(1, 0) = -0.2;
  EXPECT_THROW((GroundTruth{Matrix(4, 2, 0.3), neg}.validate()), PreconditionError);
}

TEST(Scene, ShapesAndScaling) {
  SceneSpec spec;
  spec.width = 10;
  spec.height = 12;
  spec.sigma = 0.01;
  const auto scene = make_scene(spec, 3);
  EXPECT_EQ(scene.bands(), 50u);
  EXPECT_EQ(scene.pixel_count(), 120u);
  EXPECT_EQ(scene.width(), 10u);
  const auto scaled = min_max_scale(scene);
  const auto [mn, mx] = std::minmax_element(scaled.pixels().values().begin(), scaled.pixels().values().end());
  EXPECT_DOUBLE_EQ(*mn, 0.0);
  EXPECT_DOUBLE_EQ(*mx, 1.0);
  EXPECT_TRUE(scaled.min_max_scaled());

  spec.sigma = 0.0;
  const auto clean = min_max_scale(make_scene(spec, 3));
  const auto& gt = *clean.ground_truth();
  EXPECT_LT(max_abs_diff(clean.pixels(), testutil::naive_matmul(gt.endmembers, gt.abundances)), 1e-12);
}

TEST(SpectralAngle, KnownValues) {
  const std::vector<double> x{1, 0}, y{0, 1}, z{2, 0};
  EXPECT_NEAR(spectral_angle(x, y), M_PI / 2, 1e-15);
  EXPECT_NEAR(spectral_angle(x, z), 0.0, 1e-7);
  const std::vector<double> zero{0, 0};
  EXPECT_THROW(spectral_angle(x, zero), DegenerateSpectrumError);
}

}  // namespace
