#include "paver/encoder.hpp"

#include <algorithm>
#include <cmath>

namespace paver {

void EncoderParams::collect(const std::string& prefix, nn::NamedParams& out) {
  out.emplace_back(prefix + ".cls_token", &cls_token);
  out.emplace_back(prefix + ".pos_embedding", &pos_embedding);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string p = prefix + ".blocks." + std::to_string(b);
    blocks[b].norm1.collect(p + ".norm1", out);
    blocks[b].attn.collect(p + ".attn", out);
    blocks[b].norm2.collect(p + ".norm2", out);
    blocks[b].mlp.collect(p + ".mlp", out);
  }
  final_norm.collect(prefix + ".norm", out);
}

EncoderParams init_encoder(const EncoderConfig& cfg, std::size_t num_patches, nn::Rng& rng) {
  EncoderParams p;
  p.cls_token = nn::random_normal({cfg.channels}, rng, cfg.init_std);
  if (cfg.pos_embedding) {
    p.pos_embedding = nn::random_normal({num_patches + 1, cfg.channels}, rng, cfg.init_std);
  }
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    EncoderBlock block;
    block.norm1 = nn::LayerNormParams::identity(cfg.channels);
    block.attn = nn::AttentionParams::init(cfg.channels, cfg.n_heads, rng, cfg.init_std);
    block.norm2 = nn::LayerNormParams::identity(cfg.channels);
    block.mlp = nn::MlpParams::init(cfg.channels, cfg.mlp_ratio * cfg.channels, rng, cfg.init_std);
    p.blocks.push_back(std::move(block));
  }
  p.final_norm = nn::LayerNormParams::identity(cfg.channels);
  return p;
}

nn::Tensor encode_frame(const nn::Tensor& patch_tokens, const EncoderParams& params) {
  const std::size_t channels = params.channels();
  if (patch_tokens.rank() != 2 || patch_tokens.cols() != channels) {
    throw ConfigError("encoder expects [N, " + std::to_string(channels) + "] tokens, got " +
                      nn::dims_to_string(patch_tokens.dims()));
  }
  const std::size_t n = patch_tokens.rows();
  if (params.has_pos_embedding() &&
      (params.pos_embedding.rank() != 2 || params.pos_embedding.rows() != n + 1 ||
       params.pos_embedding.cols() != channels)) {
    throw ConfigError("positional embedding " + nn::dims_to_string(params.pos_embedding.dims()) +
                      " does not match " + std::to_string(n + 1) + " tokens");
  }

  nn::Tensor tokens({n + 1, channels});
  std::copy(params.cls_token.values().begin(), params.cls_token.values().end(), tokens.data());
  std::copy(patch_tokens.values().begin(), patch_tokens.values().end(), tokens.data() + channels);
  if (params.has_pos_embedding()) {
    for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] += params.pos_embedding[i];
  }

  nn::Tape tape;
  nn::Binder bind(tape, false);
  nn::Var x = tape.constant(std::move(tokens));
  for (const EncoderBlock& block : params.blocks) {
    x = nn::add(x, nn::mhsa(bind, nn::apply(bind, x, block.norm1), block.attn));
    x = nn::add(x, nn::apply(bind, nn::apply(bind, x, block.norm2), block.mlp));
  }
  return nn::apply(bind, x, params.final_norm).value();
}

nn::Tensor resample_pos_embedding(const nn::Tensor& pos, int src_h, int src_w, int dst_h, int dst_w) {
  if (pos.rank() != 2 || pos.rows() != static_cast<std::size_t>(src_h * src_w + 1)) {
    throw ConfigError("positional table " + nn::dims_to_string(pos.dims()) + " is not a " +
                      std::to_string(src_h) + "x" + std::to_string(src_w) + " grid plus one");
  }
  const std::size_t c = pos.cols();
  nn::Tensor out({static_cast<std::size_t>(dst_h * dst_w + 1), c});
  for (std::size_t k = 0; k < c; ++k) out(0, k) = pos(0, k);
  auto src = [&](int r, int q, std::size_t k) { return pos(1 + static_cast<std::size_t>(r * src_w + q), k); };
  for (int r = 0; r < dst_h; ++r) {
    const double y = std::clamp((r + 0.5) * src_h / dst_h - 0.5, 0.0, src_h - 1.0);
    const int y0 = static_cast<int>(std::floor(y)), y1 = std::min(y0 + 1, src_h - 1);
    const double fy = y - y0;
    for (int q = 0; q < dst_w; ++q) {
      const double x = std::clamp((q + 0.5) * src_w / dst_w - 0.5, 0.0, src_w - 1.0);
      const int x0 = static_cast<int>(std::floor(x)), x1 = std::min(x0 + 1, src_w - 1);
      const double fx = x - x0;
      for (std::size_t k = 0; k < c; ++k) {
        out(1 + static_cast<std::size_t>(r * dst_w + q), k) =
            (1 - fy) * ((1 - fx) * src(y0, x0, k) + fx * src(y0, x1, k)) +
            fy * ((1 - fx) * src(y1, x0, k) + fx * src(y1, x1, k));
      }
    }
  }
  return out;
}

}  // namespace paver
