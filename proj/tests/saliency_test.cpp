#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "paver/saliency.hpp"

namespace paver {
namespace {

FusedFeatures random_features(std::size_t t, std::size_t n, std::size_t c, nn::Rng& rng) {
  return {oracle::random_tensor({t, c}, rng, -2, 2), oracle::random_tensor({t, n, c}, rng, -2, 2)};
}

TEST(Scores, LocalEqualToGlobalGivesZero) {
  FusedFeatures f{nn::Tensor({2, 3}), nn::Tensor({2, 4, 3})};
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t k = 0; k < 3; ++k) {
      f.global(t, k) = 0.7 * static_cast<double>(k) - 0.1;
      for (std::size_t i = 0; i < 4; ++i) f.local(t, i, k) = f.global(t, k);
    }
  // Global rows are equal across frames, so every term vanishes.
  const nn::Tensor y = saliency_scores(f);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Scores, HandCase) {
  const FusedFeatures f{nn::Tensor({1, 1}, {0.0}), nn::Tensor({1, 2, 1}, {1.0, -1.0})};
  const nn::Tensor y = saliency_scores(f);
  ASSERT_EQ(y.dims(), (nn::Dims{1, 2}));
  EXPECT_EQ(y(0, 0), 2.0);
  EXPECT_EQ(y(0, 1), 2.0);
}

TEST(Scores, MatchDirectNormOracle) {
  nn::Rng rng(1);
  std::uniform_int_distribution<std::size_t> tt(1, 4), nn_(1, 16), cc(1, 8);
  std::uniform_real_distribution<double> w(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const FusedFeatures f = random_features(tt(rng), nn_(rng), cc(rng), rng);
    const ScoreWeights sw{w(rng), w(rng), w(rng)};
    const nn::Tensor got = saliency_scores(f, sw);
    const nn::Tensor want = oracle::direct_scores(f, sw.local, sw.temporal, sw.spatial);
    ASSERT_EQ(got.dims(), want.dims());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
  }
}

TEST(Scores, LocalTermAloneIsDistanceToGlobal) {
  nn::Rng rng(2);
  const FusedFeatures f = random_features(3, 5, 4, rng);
  const nn::Tensor y = saliency_scores(f, {1.0, 0.0, 0.0});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(y(t, i), oracle::sqdist(&f.local(t, i, 0), &f.global(t, 0), 4), 1e-13);
}

TEST(Scores, NonNegative) {
  nn::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const nn::Tensor y = saliency_scores(random_features(4, 6, 3, rng));
    for (double v : y.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(Scores, ShapeMismatchThrows) {
  EXPECT_THROW(saliency_scores({nn::Tensor({2, 3}), nn::Tensor({3, 4, 3})}), ConfigError);
  EXPECT_THROW(saliency_scores({nn::Tensor({2, 2}), nn::Tensor({2, 4, 3})}), ConfigError);
}

TEST(Kernel, ConcentrationAndPeak) {
  EXPECT_NEAR(vmf_concentration(448, 448 / (2 * geom::kPi)), 1.0, 1e-14);
  EXPECT_NEAR(vmf_kernel(1.0, 1.0), std::exp(1.0) / std::sinh(1.0), 1e-15);
  EXPECT_NEAR(vmf_kernel(1.0, 1.0), 2.31304, 1e-5);
  EXPECT_NEAR(vmf_kernel(1.0, 1.0), 2.3130352854993315, 1e-6);
  EXPECT_NEAR(default_sigma(448), 7.0, 1e-15);
  EXPECT_THROW(vmf_concentration(448, 0.0), ConfigError);
  EXPECT_THROW(vmf_concentration(448, -1.0), ConfigError);
}

TEST(Kernel, LargeConcentrationStaysFinite) {
  const double a = 5000.0;
  EXPECT_NEAR(vmf_kernel(a, 1.0), 2 * a, 1e-9 * a);
  EXPECT_NEAR(vmf_kernel(a, -1.0), 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(vmf_kernel(a, 0.3)));
}

TEST(Kernel, IntegratesToFourPi) {
  const geom::SphereCoord centre{1.1, 0.4};
  const geom::Vec3 mu = geom::direction(centre);
  for (double a : {0.5, 1.0, 5.0, 20.0}) {
    const double integral = oracle::sphere_integral([&](double theta, double phi) {
      return vmf_kernel(a, geom::dot(geom::direction({theta, phi}), mu));
    });
    EXPECT_NEAR(integral / (4 * geom::kPi), 1.0, 0.005) << "a=" << a;
  }
}

TEST(Kernel, MonotoneInAngle) {
  for (double a : {0.5, 3.0, 40.0}) {
    double prev = vmf_kernel(a, 1.0);
    for (int k = 1; k <= 50; ++k) {
      const double cur = vmf_kernel(a, std::cos(geom::kPi * k / 50));
      EXPECT_LT(cur, prev);
      prev = cur;
    }
  }
}

double single_patch_value(const geom::GridConfig& cfg, geom::Format format, int patch, double score, double a,
                          int x, int y) {
  const geom::SphereCoord c = geom::patch_center(cfg, patch);
  const geom::Vec3 d = geom::direction_from_raster(format, {static_cast<double>(x), static_cast<double>(y)}, cfg);
  return score * std::cos(c.phi) * vmf_kernel(a, geom::dot(d, geom::direction(c)));
}

TEST(Smooth, SinglePatchMatchesKernelFormula) {
  for (geom::Format format : {geom::Format::erp, geom::Format::cmp}) {
    const geom::GridConfig cfg{format == geom::Format::erp ? 64 : 48, 32, 8};
    const int n = cfg.num_patches(), target = n / 2 + 1;
    nn::Tensor coarse({1, static_cast<std::size_t>(n)});
    coarse(0, static_cast<std::size_t>(target)) = 1.7;
    const double sigma = 4.0;
    const nn::Tensor dense = smooth_to_map(coarse, cfg, {sigma, SmoothMode::exact, format});
    ASSERT_EQ(dense.dims(), (nn::Dims{1, 32, static_cast<std::size_t>(cfg.width)}));
    const double a = vmf_concentration(cfg.width, sigma);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < cfg.width; ++x) {
        const double want = single_patch_value(cfg, format, target, 1.7, a, x, y);
        EXPECT_NEAR(dense(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x)), want, 1e-12 * std::max(1.0, want));
      }
  }
}

TEST(Smooth, EquatorPatchPeaksAtCentreAndFallsWithAngle) {
  const geom::GridConfig cfg{64, 32, 1};
  const int n = cfg.num_patches();
  const int target = 16 * 64 + 20;  // row 16 is the equator with unit patches
  nn::Tensor coarse({1, static_cast<std::size_t>(n)});
  coarse(0, static_cast<std::size_t>(target)) = 1.0;
  const geom::SphereCoord c = geom::patch_center(cfg, target);
  EXPECT_NEAR(c.phi, 0.0, 1e-15);
  const nn::Tensor dense = smooth_to_map(coarse, cfg, {3.0, SmoothMode::exact, geom::Format::erp});
  const auto peak = std::max_element(dense.values().begin(), dense.values().end()) - dense.values().begin();
  EXPECT_EQ(peak, target);
  std::vector<std::pair<double, double>> by_angle;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 64; ++x) {
      const geom::Vec3 d = geom::direction_from_raster(geom::Format::erp, {double(x), double(y)}, cfg);
      by_angle.emplace_back(geom::angle_between(d, geom::direction(c)), dense[static_cast<std::size_t>(y * 64 + x)]);
    }
  std::sort(by_angle.begin(), by_angle.end());
  for (std::size_t i = 1; i < by_angle.size(); ++i) {
    if (by_angle[i].first > by_angle[i - 1].first + 1e-12) {
      EXPECT_LE(by_angle[i].second, by_angle[i - 1].second + 1e-15);
    }
  }
}

TEST(Smooth, LinearInScores) {
  const geom::GridConfig cfg{64, 32, 8};
  nn::Rng rng(4);
  const nn::Tensor u = oracle::random_tensor({2, 32}, rng, 0, 3), v = oracle::random_tensor({2, 32}, rng, 0, 3);
  for (SmoothMode mode : {SmoothMode::truncated, SmoothMode::exact}) {
    const SmoothOptions opt{2.5, mode, geom::Format::erp};
    const nn::Tensor su = smooth_to_map(u, cfg, opt), sv = smooth_to_map(v, cfg, opt);
    const nn::Tensor suv = smooth_to_map(oracle::plus(u, v), cfg, opt);
    for (std::size_t i = 0; i < suv.size(); ++i) EXPECT_NEAR(suv[i], su[i] + sv[i], 1e-10);
  }
}

TEST(Smooth, TruncationIsNegligible) {
  const geom::GridConfig cfg{64, 32, 8};
  nn::Rng rng(5);
  const nn::Tensor u = oracle::random_tensor({1, 4, 8}, rng, 0, 1);
  for (double sigma : {1.0, 2.0, 4.0}) {
    const nn::Tensor a = smooth_to_map(u, cfg, {sigma, SmoothMode::truncated, geom::Format::erp});
    const nn::Tensor b = smooth_to_map(u, cfg, {sigma, SmoothMode::exact, geom::Format::erp});
    // Each dropped term is below e^-8 of that patch's kernel peak; a conservative
    // 2x covers the cos(psi) - 1 vs -psi^2/2 slack.
    const double conc = vmf_concentration(64, sigma);
    double bound = 0;
    for (int i = 0; i < 32; ++i) bound += u[static_cast<std::size_t>(i)] * std::cos(geom::patch_center(cfg, i).phi);
    bound *= vmf_kernel(conc, 1.0) * std::exp(-8.0) * 2.0;
    EXPECT_GT(nn::max_abs_diff(a, b), 0.0);
    EXPECT_LT(nn::max_abs_diff(a, b), bound);
  }
}

TEST(Smooth, LargerSigmaFlattensSinglePatch) {
  const geom::GridConfig cfg{64, 32, 8};
  nn::Tensor coarse({1, 32});
  coarse(0, 12) = 1.0;
  double prev_ratio = 1e300, prev_a = 1e300;
  for (double sigma : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double a = vmf_concentration(64, sigma);
    EXPECT_LT(a, prev_a);
    prev_a = a;
    const nn::Tensor d = smooth_to_map(coarse, cfg, {sigma, SmoothMode::exact, geom::Format::erp});
    double mean = 0, peak = 0;
    for (double x : d.values()) {
      mean += x / static_cast<double>(d.size());
      peak = std::max(peak, x);
    }
    EXPECT_LT(peak / mean, prev_ratio);
    prev_ratio = peak / mean;
  }
}

TEST(Smooth, RejectsBadInput) {
  const geom::GridConfig cfg{64, 32, 8};
  EXPECT_THROW(smooth_to_map(nn::Tensor({1, 32}), cfg, {0.0}), ConfigError);
  EXPECT_THROW(smooth_to_map(nn::Tensor({1, 32}), cfg, {-2.0}), ConfigError);
  EXPECT_THROW(smooth_to_map(nn::Tensor({1, 31}), cfg, {2.0}), ConfigError);
}

TEST(Normalize, ConstantBecomesZero) {
  const nn::Tensor m = normalize_map(nn::Tensor({2, 3, 4}, 5.5));
  for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, UnitRangeUnchanged) {
  nn::Rng rng(6);
  nn::Tensor m = oracle::random_tensor({1, 4, 5}, rng, 0.1, 0.9);
  m[3] = 0.0;
  m[7] = 1.0;
  EXPECT_TRUE(normalize_map(m) == m);
}

TEST(Normalize, AffineInvariantPerFrame) {
  nn::Rng rng(7);
  const nn::Tensor m = oracle::random_tensor({3, 4, 5}, rng, -2, 5);
  nn::Tensor t = m;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (i < 20 ? 3.0 : 0.2) * t[i] + (i < 40 ? 7.0 : -1.0);
  const nn::Tensor a = normalize_map(m), b = normalize_map(t);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto frame = a.values().subspan(f * 20, 20);
    EXPECT_EQ(*std::min_element(frame.begin(), frame.end()), 0.0);
    EXPECT_EQ(*std::max_element(frame.begin(), frame.end()), 1.0);
  }
}

}  // namespace
}  // namespace paver
