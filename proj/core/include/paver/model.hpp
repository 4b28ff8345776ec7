#pragma once

// Full model (embedding, encoder, fusion), its weight-container mapping, and
// the clip-level saliency and training pipelines.

#include <cstdint>
#include <vector>

#include "paver/encoder.hpp"
#include "paver/fusion.hpp"
#include "paver/io.hpp"
#include "paver/objective.hpp"
#include "paver/patch_embed.hpp"
#include "paver/saliency.hpp"

namespace paver {

struct ModelConfig {
  int patch = 16;
  std::size_t channels = 64;
  std::size_t encoder_depth = 2;
  int encoder_heads = 4;
  int fusion_heads = 8;
  std::size_t mlp_ratio = 4;
  bool pos_embedding = false;
  std::size_t num_patches = 0;  // sizes the positional table when enabled
  bool fusion_pre_norm = false;
  double init_std = 0.02;
};

struct Model {
  EmbedParams embed;
  EncoderParams encoder;
  FusionParams fusion;

  int patch() const;
  std::size_t channels() const { return embed.channels(); }
  /// Every tensor in container order; the positional table only when present.
  nn::NamedParams named_params();
};

Model init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Names mirror named_params(); head counts are stored as "meta.*" scalars.
io::WeightContainer to_container(const Model& model);
/// Rebuilds a model from a container. Throws ConfigError on a missing,
/// misshapen or unexpected tensor.
Model from_container(const io::WeightContainer& container);

/// Overwrites the slots named in `container`, leaving the others untouched.
/// "meta.*" entries are ignored; unknown names and shape mismatches throw
/// ConfigError. A positional table is accepted even if the model had none.
/// When its row count differs from the model's and `grid` is given, it is
/// resampled from a square (or 1:2) source grid onto grid's patch layout.
void load_weights(Model& model, const io::WeightContainer& container, const geom::GridConfig* grid = nullptr);

struct PipelineOptions {
  std::size_t window = 5;
  ScoreWeights weights;
  double sigma = 0.0;  // <= 0 means default_sigma(W)
  SmoothMode smooth_mode = SmoothMode::truncated;
  int jobs = 1;
};

/// Per-frame encoder outputs [(N+1), C]. Throws NumericError on a
/// non-finite embedding or encoding.
ClipTokens encode_clip(const std::vector<Frame>& frames, const geom::OffsetTable& offsets, const Model& model,
                       int jobs = 1);

/// embed -> encode -> fuse -> score over T-frame windows, then smooth and
/// normalise. A trailing partial window reuses the last T frames of the clip.
/// Frames whose coarse scores are all equal (relative 1e-9) map to zeros.
SaliencyRaster run_saliency(const std::vector<Frame>& frames, const geom::OffsetTable& offsets, const Model& model,
                            const PipelineOptions& options);

/// Coarse scores [T, N] from precomputed tokens, windowed as in run_saliency.
nn::Tensor clip_scores(const ClipTokens& tokens, const FusionParams& fusion, std::size_t window,
                       const ScoreWeights& weights, int jobs = 1);

/// Encodes every clip with the frozen encoder and fits the fusion parameters.
TrainResult train_model(const std::vector<std::vector<Frame>>& clips, const geom::OffsetTable& offsets,
                        Model& model, const TrainConfig& config, int jobs = 1);

/// Runs body(i) for i in [0, n) on up to `jobs` threads; the first exception
/// (lowest index) is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace paver
