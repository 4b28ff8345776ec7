#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "paver/fusion.hpp"
#include "paver/grad_check.hpp"

namespace paver {
namespace {

FusionParams toy_fusion(std::size_t c, int heads, std::uint64_t seed, double stddev = 0.3) {
  FusionConfig cfg;
  cfg.channels = c;
  cfg.n_heads = heads;
  cfg.init_std = stddev;
  nn::Rng rng(seed);
  FusionParams p = init_fusion(cfg, rng);
  nn::NamedParams named;
  p.collect("fusion", named);
  for (auto& [name, t] : named) {
    if (name.ends_with(".bias")) *t = oracle::random_tensor(t->dims(), rng, -0.2, 0.2);
  }
  return p;
}

// Row (t, i) of a [T, N, C] tensor as a [1, C] matrix view helper.
nn::Tensor pick(const nn::Tensor& x, const std::vector<std::pair<std::size_t, std::size_t>>& rows) {
  const std::size_t c = x.dim(2);
  nn::Tensor out({rows.size(), c});
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < c; ++k) out(r, k) = x(rows[r].first, rows[r].second, k);
  return out;
}

nn::Tensor loop_local_fuse(const nn::Tensor& x, const FusionParams& p) {
  const std::size_t t_count = x.dim(0), n = x.dim(1), c = x.dim(2);
  nn::Tensor mixed = x;
  for (std::size_t t = 0; t < t_count; ++t) {
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t i = 0; i < n; ++i) rows.emplace_back(t, i);
    nn::Tensor in = pick(x, rows);
    if (p.pre_norm) in = oracle::ln_rows(in, p.spatial_norm);
    const nn::Tensor sa = oracle::attention(in, p.spatial);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) mixed(t, i, k) += 0.5 * sa(i, k);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t t = 0; t < t_count; ++t) rows.emplace_back(t, i);
    nn::Tensor in = pick(x, rows);
    if (p.pre_norm) in = oracle::ln_rows(in, p.temporal_norm);
    const nn::Tensor ta = oracle::attention(in, p.temporal);
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t k = 0; k < c; ++k) mixed(t, i, k) += 0.5 * ta(t, k);
  }
  const nn::Tensor flat = mixed.reshaped({t_count * n, c});
  return oracle::plus(flat, oracle::two_layer(flat, p.local_mlp)).reshaped({t_count, n, c});
}

void zero(nn::LinearParams& l) {
  l.weight.fill(0.0);
  l.bias.fill(0.0);
}

TEST(GlobalContext, ZeroWeightsGiveLastBias) {
  FusionParams p = toy_fusion(4, 2, 1);
  p.global_mlp.fc1.weight.fill(0.0);
  p.global_mlp.fc2.weight.fill(0.0);
  nn::Rng rng(2);
  const nn::Tensor y = global_context(oracle::random_tensor({3, 4}, rng), p);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(y(t, k), p.global_mlp.fc2.bias[k]);
}

TEST(GlobalContext, IdenticalRowsStayIdentical) {
  const FusionParams p = toy_fusion(4, 2, 3);
  nn::Tensor x({5, 4});
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 4; ++k) x(t, k) = 0.1 * static_cast<double>(k) - 0.2;
  const nn::Tensor y = global_context(x, p);
  for (std::size_t t = 1; t < 5; ++t)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(y(t, k), y(0, k));
}

TEST(GlobalContext, TwoChannelHandCase) {
  FusionParams p = toy_fusion(2, 1, 4);
  p.global_mlp.fc1 = {nn::Tensor({2, 2}, {1, 0, 1, -1}), nn::Tensor({2}, {0, 0.5})};
  p.global_mlp.fc2 = {nn::Tensor({2, 2}, {2, 0, 1, 1}), nn::Tensor({2}, {0.25, 0})};
  const nn::Tensor y = global_context(nn::Tensor({1, 2}, {1.0, 2.0}), p);
  // Hidden pre-activations are 1 and -0.5.
  const double h0 = nn::gelu(1.0), h1 = nn::gelu(-0.5);
  EXPECT_NEAR(h0, 0.8413447460685429, 1e-15);
  EXPECT_NEAR(h1, -0.15426876936299347, 1e-15);
  EXPECT_NEAR(y(0, 0), 2 * h0 + 0.25, 1e-15);
  EXPECT_NEAR(y(0, 1), h0 + h1, 1e-15);
}

TEST(LocalFuse, ZeroProjectionsArePureResidual) {
  FusionParams p = toy_fusion(8, 2, 5);
  for (nn::AttentionParams* a : {&p.spatial, &p.temporal}) {
    zero(a->v);
    zero(a->o);
  }
  zero(p.local_mlp.fc2);
  nn::Rng rng(6);
  const nn::Tensor x = oracle::random_tensor({3, 4, 8}, rng);
  EXPECT_TRUE(local_fuse(x, p) == x);
}

TEST(LocalFuse, SingleFrameTemporalIsLinearMap) {
  FusionParams p = toy_fusion(4, 2, 7);
  zero(p.spatial.v);
  zero(p.spatial.o);
  zero(p.local_mlp.fc2);
  nn::Rng rng(8);
  const nn::Tensor x = oracle::random_tensor({1, 5, 4}, rng);
  const nn::Tensor y = local_fuse(x, p);
  const nn::Tensor flat = x.reshaped({5, 4});
  const nn::Tensor lin = oracle::affine(oracle::affine(flat, p.temporal.v), p.temporal.o);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(y(0, i, k), x(0, i, k) + 0.5 * lin(i, k), 1e-15);
}

TEST(LocalFuse, TwoByTwoHandCase) {
  FusionParams p;
  const nn::Tensor id({2, 2}, {1, 0, 0, 1});
  p.spatial.n_heads = p.temporal.n_heads = 1;
  p.spatial.q = p.spatial.k = p.spatial.v = p.spatial.o = {id, nn::Tensor({2})};
  p.temporal = p.spatial;
  p.temporal.v = {nn::Tensor({2, 2}, {0, 1, 1, 0}), nn::Tensor({2})};
  p.local_mlp = nn::MlpParams{nn::LinearParams::zeros(2, 2), nn::LinearParams::zeros(2, 2)};
  p.global_mlp = p.local_mlp;
  // Frame 0 holds e1, e2; frame 1 holds 2 e1, 0.
  const nn::Tensor x({2, 2, 2}, {1, 0, 0, 1, 2, 0, 0, 0});
  const double r = std::sqrt(2.0);
  auto sm = [](double a, double b) { return 1.0 / (1.0 + std::exp(b - a)); };
  // Spatial, frame 0: scores I/r. Frame 1: token (2,0) vs (0,0): scores 4/r, 0 / 0, 0.
  const double s0 = sm(1 / r, 0);
  const double s1 = sm(4 / r, 0);
  const double spatial[2][2][2] = {{{s0, 1 - s0}, {1 - s0, s0}}, {{2 * s1, 0}, {1.0, 0}}};
  // Temporal, patch 0: tokens e1 and 2e1, value swaps channels. Patch 1: e2 and 0.
  const double a00 = sm(1 / r, 2 / r), a10 = sm(2 / r, 4 / r);
  const double a01 = sm(1 / r, 0);
  const double temporal[2][2][2] = {{{0, a00 + 2 * (1 - a00)}, {a01, 0}},
                                    {{0, a10 + 2 * (1 - a10)}, {0.5, 0}}};
  const nn::Tensor y = local_fuse(x, p);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 2; ++k)
        EXPECT_NEAR(y(t, i, k), x(t, i, k) + 0.5 * (spatial[t][i][k] + temporal[t][i][k]), 1e-15)
            << t << i << k;
}

TEST(LocalFuse, MatchesLoopOracle) {
  nn::Rng rng(9);
  for (bool pre_norm : {false, true}) {
    FusionParams p = toy_fusion(8, 2, 10);
    p.pre_norm = pre_norm;
    p.spatial_norm.gain = oracle::random_tensor({8}, rng, 0.5, 1.5);
    p.temporal_norm.shift = oracle::random_tensor({8}, rng);
    const nn::Tensor x = oracle::random_tensor({4, 6, 8}, rng);
    EXPECT_LT(nn::max_abs_diff(local_fuse(x, p), loop_local_fuse(x, p)), 1e-12);
  }
}

TEST(LocalFuse, PatchPermutationEquivariant) {
  const FusionParams p = toy_fusion(4, 2, 11);
  nn::Rng rng(12);
  const nn::Tensor x = oracle::random_tensor({3, 5, 4}, rng);
  const std::vector<std::size_t> perm{4, 2, 0, 1, 3};
  nn::Tensor xp(x.dims());
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < 4; ++k) xp(t, i, k) = x(t, perm[i], k);
  const nn::Tensor y = local_fuse(x, p), yp = local_fuse(xp, p);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(yp(t, i, k), y(t, perm[i], k), 1e-10);
}

TEST(LocalFuse, FramePermutationEquivariantWithoutSpatialAxis) {
  FusionParams p = toy_fusion(4, 2, 13);
  zero(p.spatial.v);
  zero(p.spatial.o);
  nn::Rng rng(14);
  const nn::Tensor x = oracle::random_tensor({4, 3, 4}, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  nn::Tensor xp(x.dims());
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 4; ++k) xp(t, i, k) = x(perm[t], i, k);
  const nn::Tensor y = local_fuse(x, p), yp = local_fuse(xp, p);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(yp(t, i, k), y(perm[t], i, k), 1e-10);
}

TEST(Fuse, TapeAndTensorPathsAgree) {
  const FusionParams p = toy_fusion(4, 2, 15);
  nn::Rng rng(16);
  const nn::Tensor g = oracle::random_tensor({3, 4}, rng), l = oracle::random_tensor({3, 5, 4}, rng);
  const FusedFeatures f = fuse(g, l, p);
  EXPECT_TRUE(f.global == global_context(g, p));
  EXPECT_TRUE(f.local == local_fuse(l, p));
  EXPECT_EQ(f.frames(), 3u);
  EXPECT_EQ(f.patches(), 5u);
}

TEST(Fuse, GradientsPassFiniteDifferenceCheck) {
  nn::Rng rng(18);
  const nn::Tensor g = oracle::random_tensor({3, 4}, rng), l = oracle::random_tensor({3, 2, 4}, rng);
  const nn::Tensor target = oracle::random_tensor({3, 2, 4}, rng);
  for (bool pre_norm : {false, true}) {
    FusionParams p = toy_fusion(4, 2, 17, 0.4);
    p.pre_norm = pre_norm;
    auto scalar = [&](nn::Binder& bind) {
      nn::Tape& tape = bind.tape();
      const FusedVars out = fuse(bind, tape.constant(g), tape.constant(l.reshaped({6, 4})), 3, 2, p);
      return nn::add(nn::sum_squares(out.global),
                     nn::sum_squares(nn::sub(out.local, tape.constant(target.reshaped({6, 4})))));
    };
    nn::NamedParams slots;
    p.collect("fusion", slots);
    const nn::GradCheckReport report = nn::grad_check(slots, scalar);
    EXPECT_TRUE(report.passed) << report.summary();
    EXPECT_LT(report.max_rel_error, 1e-4);
  }
}

TEST(SplitTokens, SeparatesGlobalRow) {
  nn::Rng rng(19);
  const std::vector<nn::Tensor> grids{oracle::random_tensor({4, 2}, rng), oracle::random_tensor({4, 2}, rng)};
  nn::Tensor g, l;
  split_tokens(grids, g, l);
  ASSERT_EQ(g.dims(), (nn::Dims{2, 2}));
  ASSERT_EQ(l.dims(), (nn::Dims{2, 3, 2}));
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(g(t, k), grids[t](0, k));
      for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(l(t, i, k), grids[t](i + 1, k));
    }
  EXPECT_THROW(split_tokens({}, g, l), ConfigError);
  EXPECT_THROW(split_tokens({nn::Tensor({1, 2})}, g, l), ConfigError);
  EXPECT_THROW(split_tokens({nn::Tensor({3, 2}), nn::Tensor({4, 2})}, g, l), ConfigError);
}

TEST(Fuse, ShapeMismatchThrows) {
  const FusionParams p = toy_fusion(4, 2, 20);
  EXPECT_THROW(fuse(nn::Tensor({2, 4}), nn::Tensor({3, 5, 4}), p), ConfigError);
  EXPECT_THROW(local_fuse(nn::Tensor({3, 5, 6}), p), ConfigError);
}

}  // namespace
}  // namespace paver
