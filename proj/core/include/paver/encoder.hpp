#pragma once

#include <vector>

#include "paver/nn.hpp"

namespace paver {

/// Pre-norm transformer block: x += MHSA(LN(x)); x += MLP(LN(x)).
struct EncoderBlock {
  nn::LayerNormParams norm1;
  nn::AttentionParams attn;
  nn::LayerNormParams norm2;
  nn::MlpParams mlp;
};

struct EncoderParams {
  nn::Tensor cls_token;      // [C]
  nn::Tensor pos_embedding;  // [(N+1), C], or empty when disabled
  std::vector<EncoderBlock> blocks;
  nn::LayerNormParams final_norm;

  std::size_t channels() const { return cls_token.size(); }
  std::size_t depth() const { return blocks.size(); }
  bool has_pos_embedding() const { return !pos_embedding.empty(); }

  void collect(const std::string& prefix, nn::NamedParams& out);
};

struct EncoderConfig {
  std::size_t channels = 64;
  std::size_t depth = 2;
  int n_heads = 4;
  std::size_t mlp_ratio = 4;
  bool pos_embedding = false;
  double init_std = 0.02;
};

/// Random initialisation; `num_patches` sizes the optional positional table.
EncoderParams init_encoder(const EncoderConfig& cfg, std::size_t num_patches, nn::Rng& rng);

/// Prefixes the global token, runs every block and the final norm.
/// Returns [(N+1), C] with row 0 the global token output.
nn::Tensor encode_frame(const nn::Tensor& patch_tokens, const EncoderParams& params);

/// Bilinearly resamples the patch rows of a positional table laid out on a
/// src_h x src_w grid onto a dst_h x dst_w grid. Row 0 (global token) is kept.
nn::Tensor resample_pos_embedding(const nn::Tensor& pos, int src_h, int src_w, int dst_h, int dst_w);

}  // namespace paver
