#pragma once

// Saliency evaluation (CC, AUC-Judd, AUC-Borji) and full-reference quality
// metrics with arbitrary per-pixel weights (PSNR, WS-PSNR, S-PSNR).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paver/geometry.hpp"
#include "paver/patch_embed.hpp"
#include "paver/tensor.hpp"

namespace paver::metrics {

/// Pearson correlation over all elements. Throws DomainError if either map is constant.
double cc(const nn::Tensor& pred, const nn::Tensor& gt);
/// Weighted Pearson correlation; `weights` has the shape of the maps.
double cc_weighted(const nn::Tensor& pred, const nn::Tensor& gt, const nn::Tensor& weights);
/// Per-pixel cos(latitude) for an H x W equirectangular raster.
nn::Tensor area_weights(int width, int height);

struct Fixation {
  int x = 0;
  int y = 0;
  friend bool operator==(const Fixation&, const Fixation&) = default;
};

struct FixationSet {
  int width = 0;
  int height = 0;
  std::vector<Fixation> points;

  std::size_t size() const { return points.size(); }
  /// Throws DomainError if empty, out of bounds, or covering every pixel.
  void validate() const;
};

/// Pixels at or above the p-th percentile of the heatmap [H, W].
/// Throws ConfigError unless 0 < p < 100 and DomainError on a constant map.
FixationSet binarize_gt(const nn::Tensor& heatmap, double percentile = 95.0);

/// Threshold sweep at the saliency of every fixation; trapezoidal ROC area.
double auc_judd(const nn::Tensor& pred, const FixationSet& fix);

/// Mean ROC area over `n_splits` draws of |fix| negatives sampled uniformly
/// (with replacement) from the non-fixation pixels. Ties count one half.
double auc_borji(const nn::Tensor& pred, const FixationSet& fix, int n_splits = 100,
                 std::uint64_t seed = 0);

/// Rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// Quality metrics.

inline constexpr double kPsnrCap = 99.0;

struct PsnrResult {
  double db = 0.0;
  double mse = 0.0;  // mean over frames of the weighted per-frame MSE
  bool exact_match = false;
};

enum class ErrorSpace { luma, rgb_mean };

/// BT.601 luma plane [H, W] of a [3, H, W] frame.
nn::Tensor luma(const Frame& frame);

/// Per-frame error plane [H, W]: squared luma difference, or the mean of the
/// squared per-channel differences.
nn::Tensor squared_error(const Frame& ref, const Frame& dist, ErrorSpace space = ErrorSpace::luma);

/// 10 log10(MAX^2 / MSE), MSE averaged over frames from per-frame weighted
/// means. `weights` holds zero maps (uniform), one map for every frame, or one
/// per frame; each is normalised to sum 1. Identical inputs report kPsnrCap.
PsnrResult psnr_weighted(const std::vector<Frame>& ref, const std::vector<Frame>& dist,
                         const std::vector<nn::Tensor>& weights, double max_value = 1.0,
                         ErrorSpace space = ErrorSpace::luma);
PsnrResult psnr(const std::vector<Frame>& ref, const std::vector<Frame>& dist, double max_value = 1.0,
                ErrorSpace space = ErrorSpace::luma);
/// Equirectangular row weights cos((j + 0.5 - H/2) pi / H).
nn::Tensor ws_weights(int width, int height);
PsnrResult ws_psnr(const std::vector<Frame>& ref, const std::vector<Frame>& dist, double max_value = 1.0,
                   ErrorSpace space = ErrorSpace::luma);

/// PSNR from an MSE value, capped at kPsnrCap.
double db_from_mse(double mse, double max_value);

struct SpherePointSet {
  std::vector<geom::Vec3> directions;
  std::string generator = "fibonacci";
  std::uint64_t seed = 0;

  std::size_t size() const { return directions.size(); }
};

/// Spherical Fibonacci lattice; a nonzero seed adds a random azimuthal offset.
SpherePointSet fibonacci_points(std::size_t count = 10242, std::uint64_t seed = 0);

/// Samples both sequences at every direction's raster position. Optional
/// weight maps ([H, W], sampled at the same points) follow the psnr_weighted
/// broadcasting rules.
PsnrResult spsnr(const std::vector<Frame>& ref, const std::vector<Frame>& dist, const SpherePointSet& pts,
                 const std::vector<nn::Tensor>& weights = {}, double max_value = 1.0,
                 ErrorSpace space = ErrorSpace::luma);

}  // namespace paver::metrics
