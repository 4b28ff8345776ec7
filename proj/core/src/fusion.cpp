#include "paver/fusion.hpp"

#include <algorithm>
#include <numeric>

namespace paver {

void FusionParams::collect(const std::string& prefix, nn::NamedParams& out) {
  global_mlp.collect(prefix + ".global_mlp", out);
  spatial.collect(prefix + ".spatial", out);
  temporal.collect(prefix + ".temporal", out);
  local_mlp.collect(prefix + ".local_mlp", out);
  if (pre_norm) {
    spatial_norm.collect(prefix + ".spatial_norm", out);
    temporal_norm.collect(prefix + ".temporal_norm", out);
  }
}

FusionParams init_fusion(const FusionConfig& cfg, nn::Rng& rng) {
  FusionParams p;
  const std::size_t hidden = cfg.hidden_ratio * cfg.channels;
  p.global_mlp = nn::MlpParams::init(cfg.channels, hidden, rng, cfg.init_std);
  p.spatial = nn::AttentionParams::init(cfg.channels, cfg.n_heads, rng, cfg.init_std);
  p.temporal = nn::AttentionParams::init(cfg.channels, cfg.n_heads, rng, cfg.init_std);
  p.local_mlp = nn::MlpParams::init(cfg.channels, hidden, rng, cfg.init_std);
  p.pre_norm = cfg.pre_norm;
  p.spatial_norm = nn::LayerNormParams::identity(cfg.channels);
  p.temporal_norm = nn::LayerNormParams::identity(cfg.channels);
  return p;
}

FusedVars fuse(nn::Binder& bind, nn::Var global_tokens, nn::Var local_tokens, std::size_t frames,
               std::size_t patches, const FusionParams& params) {
  const std::size_t c = params.channels();
  if (global_tokens.value().rank() != 2 || global_tokens.value().rows() != frames ||
      global_tokens.value().cols() != c) {
    throw ConfigError("fusion: global tokens " + nn::dims_to_string(global_tokens.dims()) +
                      " do not match " + std::to_string(frames) + " frames of width " + std::to_string(c));
  }
  if (local_tokens.value().rank() != 2 || local_tokens.value().rows() != frames * patches ||
      local_tokens.value().cols() != c) {
    throw ConfigError("fusion: local tokens " + nn::dims_to_string(local_tokens.dims()) +
                      " do not match " + std::to_string(frames) + "x" + std::to_string(patches));
  }

  const nn::Var global = nn::apply(bind, global_tokens, params.global_mlp);

  const nn::Var spatial_in =
      params.pre_norm ? nn::apply(bind, local_tokens, params.spatial_norm) : local_tokens;
  const nn::Var temporal_in =
      params.pre_norm ? nn::apply(bind, local_tokens, params.temporal_norm) : local_tokens;

  std::vector<nn::Var> per_frame;
  per_frame.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    per_frame.push_back(
        nn::mhsa(bind, nn::slice_rows(spatial_in, t * patches, (t + 1) * patches), params.spatial));
  }
  const nn::Var spatial = nn::concat_rows(per_frame);

  // Temporal attention runs on the transposed layout (patch-major) and is
  // permuted back to frame-major afterwards.
  std::vector<nn::Var> per_patch;
  per_patch.reserve(patches);
  std::vector<std::size_t> index(frames);
  for (std::size_t i = 0; i < patches; ++i) {
    for (std::size_t t = 0; t < frames; ++t) index[t] = t * patches + i;
    per_patch.push_back(nn::mhsa(bind, nn::gather_rows(temporal_in, index), params.temporal));
  }
  std::vector<std::size_t> back(frames * patches);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < patches; ++i) back[t * patches + i] = i * frames + t;
  }
  const nn::Var temporal = nn::gather_rows(nn::concat_rows(per_patch), back);

  const nn::Var mixed = nn::add(local_tokens, nn::scale(nn::add(spatial, temporal), 0.5));
  const nn::Var local = nn::add(mixed, nn::apply(bind, mixed, params.local_mlp));
  return {global, local};
}

nn::Tensor global_context(const nn::Tensor& global_tokens, const FusionParams& params) {
  return nn::mlp(global_tokens, params.global_mlp);
}

nn::Tensor local_fuse(const nn::Tensor& local_tokens, const FusionParams& params) {
  if (local_tokens.rank() != 3) throw ConfigError("local_fuse expects [T, N, C] tokens");
  const std::size_t t = local_tokens.dim(0), n = local_tokens.dim(1), c = local_tokens.dim(2);
  nn::Tape tape;
  nn::Binder bind(tape, false);
  const nn::Var global = tape.constant(nn::Tensor({t, c}));
  const nn::Var local = tape.constant(local_tokens.reshaped({t * n, c}));
  FusedVars out = fuse(bind, global, local, t, n, params);
  return out.local.value().reshaped({t, n, c});
}

FusedFeatures fuse(const nn::Tensor& global_tokens, const nn::Tensor& local_tokens,
                   const FusionParams& params) {
  if (local_tokens.rank() != 3) throw ConfigError("fuse expects [T, N, C] local tokens");
  const std::size_t t = local_tokens.dim(0), n = local_tokens.dim(1), c = local_tokens.dim(2);
  nn::Tape tape;
  nn::Binder bind(tape, false);
  FusedVars out = fuse(bind, tape.constant(global_tokens),
                       tape.constant(local_tokens.reshaped({t * n, c})), t, n, params);
  return {out.global.value(), out.local.value().reshaped({t, n, c})};
}

void split_tokens(const std::vector<nn::Tensor>& token_grids, nn::Tensor& global_tokens,
                  nn::Tensor& local_tokens) {
  if (token_grids.empty()) throw ConfigError("split_tokens: no frames");
  const std::size_t rows = token_grids[0].rows(), c = token_grids[0].cols();
  if (rows < 2) throw ConfigError("split_tokens: need a global token and at least one patch");
  const std::size_t t = token_grids.size(), n = rows - 1;
  global_tokens = nn::Tensor({t, c});
  local_tokens = nn::Tensor({t, n, c});
  for (std::size_t f = 0; f < t; ++f) {
    const nn::Tensor& g = token_grids[f];
    if (g.dims() != token_grids[0].dims()) throw ConfigError("split_tokens: frames differ in shape");
    std::copy_n(g.data(), c, global_tokens.data() + f * c);
    std::copy_n(g.data() + c, n * c, local_tokens.data() + f * n * c);
  }
}

}  // namespace paver
