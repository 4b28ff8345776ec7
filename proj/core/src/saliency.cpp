#include "paver/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace paver {

nn::Tensor saliency_scores(const FusedFeatures& fused, const ScoreWeights& weights) {
  const nn::Tensor& local = fused.local;
  const nn::Tensor& global = fused.global;
  if (local.rank() != 3 || global.rank() != 2 || global.rows() != local.dim(0) ||
      global.cols() != local.dim(2)) {
    throw ConfigError("saliency_scores: global " + nn::dims_to_string(global.dims()) +
                      " and local " + nn::dims_to_string(local.dims()) + " are inconsistent");
  }
  const std::size_t t_count = local.dim(0), n = local.dim(1), c = local.dim(2);

  nn::Tensor temporal_mean({n, c});
  nn::Tensor spatial_mean({t_count, c});
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < c; ++k) {
        temporal_mean(i, k) += local(t, i, k);
        spatial_mean(t, k) += local(t, i, k);
      }
    }
  }
  for (double& x : temporal_mean.values()) x /= static_cast<double>(t_count);
  for (double& x : spatial_mean.values()) x /= static_cast<double>(n);

  nn::Tensor scores({t_count, n});
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double d_global = 0.0, d_temporal = 0.0, d_spatial = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double x = local(t, i, k);
        d_global += (x - global(t, k)) * (x - global(t, k));
        d_temporal += (x - temporal_mean(i, k)) * (x - temporal_mean(i, k));
        d_spatial += (x - spatial_mean(t, k)) * (x - spatial_mean(t, k));
      }
      scores(t, i) = weights.local * d_global + weights.temporal * d_temporal + weights.spatial * d_spatial;
    }
  }
  return scores;
}

double vmf_concentration(int width, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("smoothing sigma must be positive");
  return static_cast<double>(width) * width / (4.0 * geom::kPi * geom::kPi * sigma * sigma);
}

double vmf_kernel(double a, double cos_psi) {
  // a / sinh(a) * e^{a cos psi} = 2a / (1 - e^{-2a}) * e^{a (cos psi - 1)}
  return -2.0 * a / std::expm1(-2.0 * a) * std::exp(a * (cos_psi - 1.0));
}

double default_sigma(int width) { return width / 64.0; }

nn::Tensor smooth_to_map(const nn::Tensor& coarse, const geom::GridConfig& cfg,
                         const SmoothOptions& options) {
  cfg.validate(options.format);
  const std::size_t n = static_cast<std::size_t>(cfg.num_patches());
  if (coarse.empty() || coarse.size() % n != 0 || coarse.dim(0) * n != coarse.size()) {
    throw ConfigError("smooth_to_map: coarse scores " + nn::dims_to_string(coarse.dims()) +
                      " do not hold " + std::to_string(n) + " patches per frame");
  }
  const double a = vmf_concentration(cfg.width, options.sigma);
  const std::size_t frames = coarse.dim(0);
  const int w = cfg.width, h = cfg.height;

  std::vector<geom::Vec3> pixel_dirs(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      pixel_dirs[static_cast<std::size_t>(y) * w + x] =
          geom::direction_from_raster(options.format, {static_cast<double>(x), static_cast<double>(y)}, cfg);
    }
  }

  const bool truncate = options.mode == SmoothMode::truncated && 4.0 / std::sqrt(a) < geom::kPi;
  const double max_angle = truncate ? 4.0 / std::sqrt(a) : geom::kPi;
  const double min_cos = truncate ? std::cos(max_angle) : -std::numeric_limits<double>::infinity();

  nn::Tensor dense({frames, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  std::vector<double> kernel(pixel_dirs.size());
  std::vector<std::size_t> support;
  support.reserve(pixel_dirs.size());

  for (std::size_t i = 0; i < n; ++i) {
    const geom::SphereCoord center = geom::patch_center(cfg, static_cast<int>(i));
    const geom::Vec3 cdir = geom::direction(center);
    const double area = std::cos(center.phi);

    // Candidate pixels: for ERP only the rows and columns the cap can reach.
    support.clear();
    if (options.format == geom::Format::erp && truncate) {
      const double phi_hi = center.phi + max_angle, phi_lo = center.phi - max_angle;
      const int y0 = std::max(0, static_cast<int>(std::floor(h * (0.5 - phi_hi / geom::kPi))));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(h * (0.5 - phi_lo / geom::kPi))));
      const bool all_columns = phi_hi >= geom::kPi / 2 || phi_lo <= -geom::kPi / 2 ||
                               std::sin(max_angle) >= std::cos(center.phi);
      int half_span = w;
      if (!all_columns) {
        const double dtheta = std::asin(std::sin(max_angle) / std::cos(center.phi));
        half_span = static_cast<int>(std::ceil(w * dtheta / geom::kTwoPi)) + 1;
      }
      const int cu = static_cast<int>(std::lround(geom::er_from_sph(center, cfg).u));
      for (int y = y0; y <= y1; ++y) {
        if (2 * half_span + 1 >= w) {
          for (int x = 0; x < w; ++x) support.push_back(static_cast<std::size_t>(y) * w + x);
        } else {
          for (int dx = -half_span; dx <= half_span; ++dx) {
            const int x = ((cu + dx) % w + w) % w;
            support.push_back(static_cast<std::size_t>(y) * w + x);
          }
        }
      }
    } else {
      for (std::size_t j = 0; j < pixel_dirs.size(); ++j) support.push_back(j);
    }

    for (std::size_t j : support) {
      const double cos_psi = std::clamp(geom::dot(cdir, pixel_dirs[j]), -1.0, 1.0);
      kernel[j] = cos_psi < min_cos ? 0.0 : area * vmf_kernel(a, cos_psi);
    }
    for (std::size_t t = 0; t < frames; ++t) {
      const double score = coarse[t * n + i];
      if (score == 0.0) continue;
      double* out = dense.data() + t * pixel_dirs.size();
      for (std::size_t j : support) out[j] += score * kernel[j];
    }
  }
  return dense;
}

nn::Tensor normalize_map(const nn::Tensor& dense) {
  if (dense.rank() != 3) throw ConfigError("normalize_map expects [T, H, W]");
  nn::Tensor out = dense;
  const std::size_t plane = dense.dim(1) * dense.dim(2);
  for (std::size_t t = 0; t < dense.dim(0); ++t) {
    double* p = out.data() + t * plane;
    const auto [lo, hi] = std::minmax_element(p, p + plane);
    const double mn = *lo, mx = *hi;
    if (!(mx > mn)) {
      std::fill(p, p + plane, 0.0);
      continue;
    }
    const double range = mx - mn;
    for (std::size_t j = 0; j < plane; ++j) p[j] = (p[j] - mn) / range;
  }
  return out;
}

}  // namespace paver
