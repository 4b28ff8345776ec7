#pragma once

#include "paver/fusion.hpp"
#include "paver/geometry.hpp"
#include "paver/tensor.hpp"

namespace paver {

/// Weights of the local, temporal and spatial deviation terms.
struct ScoreWeights {
  double local = 1.0;
  double temporal = 1.0;
  double spatial = 1.0;
};

/// Per-patch score [T, N]: weighted squared distances of each local feature to
/// the frame's global context, to its own temporal mean, and to the frame's
/// spatial mean.
nn::Tensor saliency_scores(const FusedFeatures& fused, const ScoreWeights& weights = {});

/// Concentration of the spherical Gaussian for a smoothing std in pixels.
double vmf_concentration(int width, double sigma);
/// (a / sinh a) * exp(a cos(psi)), evaluated without overflow.
double vmf_kernel(double a, double cos_psi);

enum class SmoothMode { truncated, exact };

struct SmoothOptions {
  double sigma = 0.0;  // pixels; <= 0 is rejected
  SmoothMode mode = SmoothMode::truncated;
  geom::Format format = geom::Format::erp;
};

/// Default smoothing std: W / 64 pixels.
double default_sigma(int width);

/// Sums every patch's score, scaled by cos(latitude) of its centre, under a
/// von Mises-Fisher kernel around that centre. coarse is [T, N] (or
/// [T, h, w]); returns [T, H, W] over the format's raster. Truncated mode
/// skips pixels farther than 4 / sqrt(a) radians from a centre.
nn::Tensor smooth_to_map(const nn::Tensor& coarse, const geom::GridConfig& cfg,
                         const SmoothOptions& options);

/// Per-frame min-max scaling of [T, H, W] to [0, 1]; constant frames become 0.
nn::Tensor normalize_map(const nn::Tensor& dense);

/// Coarse scores together with their dense, normalised upsampling.
struct SaliencyRaster {
  nn::Tensor coarse;  // [T, h, w]
  nn::Tensor dense;   // [T, H, W]
  double sigma = 0.0;
  ScoreWeights weights;
};

}  // namespace paver
