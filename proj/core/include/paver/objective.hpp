#pragma once

// Self-supervised consistency objective over fused features and the training
// loop that fits the fusion parameters with the encoder frozen.

#include <cstdint>
#include <vector>

#include "paver/autodiff.hpp"
#include "paver/fusion.hpp"
#include "paver/geometry.hpp"
#include "paver/optim.hpp"

namespace paver {

struct LossWeights {
  double temporal = 20.0;
  double spatial = 0.5;
  double global = 0.1;
  double epsilon = 0.0;  // geodesic neighbourhood radius; <= 0 means default_epsilon

  void validate() const;
};

/// 2.5 equatorial patch widths, in radians.
double default_epsilon(const geom::GridConfig& cfg);

/// For every patch, the patches strictly within epsilon (excluding itself)
/// with weights proportional to inverse geodesic distance, summing to one.
struct SpatialNeighborhood {
  struct Neighbor {
    std::size_t index;
    double distance;
    double weight;
  };
  std::vector<std::vector<Neighbor>> patches;
  double epsilon = 0.0;

  std::size_t size() const { return patches.size(); }
};

/// Throws ConfigError if some patch has no neighbour within epsilon.
SpatialNeighborhood build_neighborhood(std::span<const geom::SphereCoord> centers, double epsilon);
/// Patch centres of the grid; epsilon <= 0 selects default_epsilon(cfg).
SpatialNeighborhood build_neighborhood(const geom::GridConfig& cfg, double epsilon);

// Tape versions; `local` is [T*N, C] frame-major, `global` is [T, C].
nn::Var loss_temporal(nn::Var local, std::size_t frames, std::size_t patches);
nn::Var loss_spatial(nn::Var local, std::size_t frames, const SpatialNeighborhood& nbhd);
nn::Var loss_global(nn::Var global);
nn::Var loss_total(nn::Var global, nn::Var local, std::size_t frames,
                   const SpatialNeighborhood& nbhd, const LossWeights& weights);

/// Mean over interior frames and patches of the squared distance between a
/// feature and the average of its two temporal neighbours. Needs T >= 3.
double loss_temporal(const nn::Tensor& local);
double loss_spatial(const nn::Tensor& local, const SpatialNeighborhood& nbhd);
/// Variance of the global context across the clip.
double loss_global(const nn::Tensor& global);
double loss_total(const FusedFeatures& fused, const SpatialNeighborhood& nbhd, const LossWeights& weights);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 5;
  std::size_t frames = 5;  // window length T
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;  // 0 = no cap
  double sigma = 0.0;         // evaluation-only smoothing; carried for config files
  nn::AdamConfig adam() const { return {lr, 0.9, 0.999, 1e-8}; }
};

/// Frozen encoder outputs of one clip: one [(N+1), C] grid per frame.
using ClipTokens = std::vector<nn::Tensor>;

struct TrainResult {
  std::vector<double> loss_trace;  // loss before each update
  std::size_t steps = 0;
};

/// Adam on the fusion parameters over non-overlapping T-frame windows of every
/// clip, window order reshuffled each epoch from `seed`. Throws TrainingError
/// with the step index on a non-finite loss or gradient.
TrainResult train_fusion(const std::vector<ClipTokens>& clips, FusionParams& params,
                         const geom::GridConfig& cfg, const TrainConfig& config);

}  // namespace paver
