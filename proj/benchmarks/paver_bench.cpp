#include <benchmark/benchmark.h>

#include "paver/encoder.hpp"
#include "paver/model.hpp"
#include "paver/objective.hpp"
#include "paver/saliency.hpp"
#include "paver/synthetic.hpp"

namespace {

using namespace paver;

// Patch side 16 throughout; the argument is the frame width (height = width / 2).
geom::GridConfig grid(const benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  return {w, w / 2, 16};
}

void BM_OffsetTable(benchmark::State& state) {
  const auto cfg = grid(state);
  for (auto _ : state) benchmark::DoNotOptimize(geom::compute_offset_table(cfg, geom::Format::erp));
  state.counters["patches"] = cfg.num_patches();
}
BENCHMARK(BM_OffsetTable)->Arg(224)->Arg(448)->Unit(benchmark::kMillisecond);

void BM_DeformEmbed(benchmark::State& state) {
  const auto cfg = grid(state);
  const auto offsets = geom::compute_offset_table(cfg, geom::Format::erp);
  const Frame frame = synth::render(synth::random_blobs(5, 1), geom::Format::erp, cfg.width, cfg.height);
  nn::Rng rng(2);
  const EmbedParams p = init_embed_params(16, 64, rng, 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(deform_embed(frame, offsets, p));
}
BENCHMARK(BM_DeformEmbed)->Arg(224)->Arg(448)->Unit(benchmark::kMillisecond);

void BM_EncodeFrame(benchmark::State& state) {
  const auto cfg = grid(state);
  nn::Rng rng(3);
  EncoderConfig ec;
  const EncoderParams enc = init_encoder(ec, static_cast<std::size_t>(cfg.num_patches()), rng);
  const nn::Tensor tokens = nn::random_normal({static_cast<std::size_t>(cfg.num_patches()), ec.channels}, rng, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(encode_frame(tokens, enc));
}
BENCHMARK(BM_EncodeFrame)->Arg(224)->Arg(448)->Unit(benchmark::kMillisecond);

void BM_SmoothToMap(benchmark::State& state) {
  const auto cfg = grid(state);
  nn::Rng rng(4);
  const nn::Tensor coarse =
      nn::random_uniform({1, static_cast<std::size_t>(cfg.patches_y()), static_cast<std::size_t>(cfg.patches_x())}, rng, 0, 1);
  SmoothOptions opts;
  opts.sigma = default_sigma(cfg.width);
  opts.mode = state.range(1) ? SmoothMode::exact : SmoothMode::truncated;
  for (auto _ : state) benchmark::DoNotOptimize(smooth_to_map(coarse, cfg, opts));
}
BENCHMARK(BM_SmoothToMap)->Args({224, 0})->Args({448, 0})->Args({224, 1})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const geom::GridConfig cfg{128, 64, 16};
  nn::Rng rng(5);
  FusionConfig fc;
  fc.channels = 64;
  FusionParams fusion = init_fusion(fc, rng);
  ClipTokens clip;
  for (int t = 0; t < 5; ++t)
    clip.push_back(nn::random_normal({static_cast<std::size_t>(cfg.num_patches()) + 1, 64}, rng, 1.0));
  TrainConfig tc;
  tc.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_fusion({clip}, fusion, cfg, tc));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
