#pragma once

// Decoupled spatiotemporal fusion. The global token of every frame goes
// through its own MLP; local tokens get the average of a spatial attention
// (over patches, per frame) and a temporal attention (over frames, per patch)
// as a residual, followed by a residual MLP.

#include <vector>

#include "paver/nn.hpp"

namespace paver {

struct FusionConfig {
  std::size_t channels = 64;
  std::size_t hidden_ratio = 4;
  int n_heads = 8;
  bool pre_norm = false;
  double init_std = 0.02;
};

struct FusionParams {
  nn::MlpParams global_mlp;
  nn::AttentionParams spatial;
  nn::AttentionParams temporal;
  nn::MlpParams local_mlp;
  bool pre_norm = false;
  nn::LayerNormParams spatial_norm;   // used only with pre_norm
  nn::LayerNormParams temporal_norm;  // used only with pre_norm

  std::size_t channels() const { return spatial.width(); }
  /// Trainable tensors in a fixed order. Norm slots appear only with pre_norm.
  void collect(const std::string& prefix, nn::NamedParams& out);
};

FusionParams init_fusion(const FusionConfig& cfg, nn::Rng& rng);

struct FusedFeatures {
  nn::Tensor global;  // [T, C]
  nn::Tensor local;   // [T, N, C]

  std::size_t frames() const { return global.rows(); }
  std::size_t patches() const { return local.dim(1); }
};

/// Tape-level outputs; `local` is flattened to [T*N, C] with row t*N + i.
struct FusedVars {
  nn::Var global;
  nn::Var local;
};

FusedVars fuse(nn::Binder& bind, nn::Var global_tokens, nn::Var local_tokens, std::size_t frames,
               std::size_t patches, const FusionParams& params);

/// Row-wise MLP over the global tokens [T, C].
nn::Tensor global_context(const nn::Tensor& global_tokens, const FusionParams& params);
/// Local fusion of [T, N, C] tokens.
nn::Tensor local_fuse(const nn::Tensor& local_tokens, const FusionParams& params);
FusedFeatures fuse(const nn::Tensor& global_tokens, const nn::Tensor& local_tokens,
                   const FusionParams& params);

/// Splits per-frame encoder outputs [(N+1), C] into global [T, C] and local [T, N, C].
void split_tokens(const std::vector<nn::Tensor>& token_grids, nn::Tensor& global_tokens,
                  nn::Tensor& local_tokens);

}  // namespace paver
