#include "paver/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "paver/errors.hpp"

namespace paver::metrics {

namespace {

void require_same_dims(const nn::Tensor& a, const nn::Tensor& b, const char* what) {
  if (a.dims() != b.dims()) {
    throw DomainError(std::string(what) + ": shape mismatch " + nn::dims_to_string(a.dims()) + " vs " +
                      nn::dims_to_string(b.dims()));
  }
}

void require_map(const nn::Tensor& m, const char* what) {
  if (m.rank() != 2 || m.empty()) throw DomainError(std::string(what) + ": expected a non-empty [H, W] map");
}

double weighted_pearson(std::span<const double> a, std::span<const double> b, std::span<const double> w) {
  double sw = 0.0, ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sw += w[i];
    ma += w[i] * a[i];
    mb += w[i] * b[i];
  }
  if (!(sw > 0.0)) throw DomainError("cc: weights sum to zero");
  ma /= sw;
  mb /= sw;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += w[i] * da * db;
    saa += w[i] * da * da;
    sbb += w[i] * db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DomainError("cc: correlation undefined for a constant map");
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<char> fixation_mask(const nn::Tensor& pred, const FixationSet& fix) {
  require_map(pred, "auc");
  fix.validate();
  if (static_cast<int>(pred.dim(0)) != fix.height || static_cast<int>(pred.dim(1)) != fix.width) {
    throw DomainError("auc: fixation raster does not match the prediction");
  }
  std::vector<char> mask(pred.size(), 0);
  for (const Fixation& f : fix.points) mask[static_cast<std::size_t>(f.y) * pred.dim(1) + f.x] = 1;
  return mask;
}

// Probability that a positive outranks a negative, ties counting one half.
double rank_auc(std::vector<double> pos, std::vector<double> neg) {
  std::sort(neg.begin(), neg.end());
  double acc = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    acc += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return acc / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace

double cc(const nn::Tensor& pred, const nn::Tensor& gt) {
  require_same_dims(pred, gt, "cc");
  if (pred.empty()) throw DomainError("cc: empty maps");
  const std::vector<double> w(pred.size(), 1.0);
  return weighted_pearson(pred.values(), gt.values(), w);
}

double cc_weighted(const nn::Tensor& pred, const nn::Tensor& gt, const nn::Tensor& weights) {
  require_same_dims(pred, gt, "cc");
  require_same_dims(pred, weights, "cc weights");
  for (double w : weights.values()) {
    if (!(w >= 0.0)) throw DomainError("cc: weights must be >= 0");
  }
  return weighted_pearson(pred.values(), gt.values(), weights.values());
}

nn::Tensor area_weights(int width, int height) { return ws_weights(width, height); }

void FixationSet::validate() const {
  if (points.empty()) throw DomainError("fixation set is empty");
  for (const Fixation& f : points) {
    if (f.x < 0 || f.y < 0 || f.x >= width || f.y >= height) {
      throw DomainError("fixation (" + std::to_string(f.x) + ", " + std::to_string(f.y) + ") outside the raster");
    }
  }
}

FixationSet binarize_gt(const nn::Tensor& heatmap, double percentile) {
  require_map(heatmap, "binarize_gt");
  if (!(percentile > 0.0 && percentile < 100.0)) throw ConfigError("percentile must lie in (0, 100)");
  std::vector<double> sorted(heatmap.values().begin(), heatmap.values().end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw DomainError("binarize_gt: heatmap is constant");
  const auto n = sorted.size();
  const auto k = std::min(n - 1, static_cast<std::size_t>(std::floor(percentile / 100.0 * static_cast<double>(n))));
  const double threshold = sorted[k];

  FixationSet fix;
  fix.height = static_cast<int>(heatmap.dim(0));
  fix.width = static_cast<int>(heatmap.dim(1));
  for (int y = 0; y < fix.height; ++y) {
    for (int x = 0; x < fix.width; ++x) {
      if (heatmap(y, x) >= threshold) fix.points.push_back({x, y});
    }
  }
  return fix;
}

double auc_judd(const nn::Tensor& pred, const FixationSet& fix) {
  const std::vector<char> mask = fixation_mask(pred, fix);
  std::vector<double> fix_sal, all(pred.values().begin(), pred.values().end());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) fix_sal.push_back(pred[i]);
  }
  const double n_fix = static_cast<double>(fix_sal.size());
  const double n_neg = static_cast<double>(all.size()) - n_fix;
  if (n_neg <= 0.0) throw DomainError("auc_judd: every pixel is a fixation");
  std::sort(fix_sal.begin(), fix_sal.end(), std::greater<>());
  std::sort(all.begin(), all.end(), std::greater<>());

  double area = 0.0, prev_tp = 0.0, prev_fp = 0.0;
  std::size_t above = 0;
  for (std::size_t i = 0; i < fix_sal.size();) {
    const double thr = fix_sal[i];
    while (i < fix_sal.size() && fix_sal[i] == thr) ++i;  // fixations >= thr
    while (above < all.size() && all[above] >= thr) ++above;
    const double tp = static_cast<double>(i) / n_fix;
    const double fp = static_cast<double>(above - i) / n_neg;
    area += 0.5 * (tp + prev_tp) * (fp - prev_fp);
    prev_tp = tp;
    prev_fp = fp;
  }
  area += 0.5 * (1.0 + prev_tp) * (1.0 - prev_fp);
  return area;
}

double auc_borji(const nn::Tensor& pred, const FixationSet& fix, int n_splits, std::uint64_t seed) {
  if (n_splits < 1) throw ConfigError("auc_borji: n_splits must be >= 1");
  const std::vector<char> mask = fixation_mask(pred, fix);
  std::vector<double> pos;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      pos.push_back(pred[i]);
    } else {
      negatives.push_back(i);
    }
  }
  if (negatives.empty()) throw DomainError("auc_borji: every pixel is a fixation");

  nn::Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, negatives.size() - 1);
  std::vector<double> neg(pos.size());
  double total = 0.0;
  for (int s = 0; s < n_splits; ++s) {
    for (double& v : neg) v = pred[negatives[pick(rng)]];
    total += rank_auc(pos, neg);
  }
  return total / n_splits;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("spearman: need two equal-length samples");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const std::vector<double> w(a.size(), 1.0);
  return weighted_pearson(ra, rb, w);
}

nn::Tensor luma(const Frame& frame) {
  const auto h = static_cast<std::size_t>(frame.height()), w = static_cast<std::size_t>(frame.width());
  nn::Tensor out({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out(y, x) = 0.299 * frame.pixels(0, y, x) + 0.587 * frame.pixels(1, y, x) + 0.114 * frame.pixels(2, y, x);
    }
  }
  return out;
}

nn::Tensor squared_error(const Frame& ref, const Frame& dist, ErrorSpace space) {
  if (ref.pixels.dims() != dist.pixels.dims()) throw DomainError("reference and distorted frames differ in shape");
  const auto h = static_cast<std::size_t>(ref.height()), w = static_cast<std::size_t>(ref.width());
  nn::Tensor err({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (space == ErrorSpace::luma) {
        double d = 0.0;
        const double k[3] = {0.299, 0.587, 0.114};
        for (std::size_t c = 0; c < 3; ++c) d += k[c] * (ref.pixels(c, y, x) - dist.pixels(c, y, x));
        err(y, x) = d * d;
      } else {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
          const double d = ref.pixels(c, y, x) - dist.pixels(c, y, x);
          s += d * d;
        }
        err(y, x) = s / 3.0;
      }
    }
  }
  return err;
}

double db_from_mse(double mse, double max_value) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max_value * max_value / mse));
}

namespace {

const nn::Tensor* weight_for(const std::vector<nn::Tensor>& weights, std::size_t frame, std::size_t frames) {
  if (weights.empty()) return nullptr;
  if (weights.size() == 1) return &weights.front();
  if (weights.size() != frames) {
    throw DomainError("expected 0, 1 or " + std::to_string(frames) + " weight maps, got " +
                      std::to_string(weights.size()));
  }
  return &weights[frame];
}

double weighted_mean(std::span<const double> err, const nn::Tensor* w) {
  if (w == nullptr) {
    double s = 0.0;
    for (double e : err) s += e;
    return s / static_cast<double>(err.size());
  }
  if (w->size() != err.size()) throw DomainError("weight map does not match the frame size");
  double sw = 0.0, s = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double wi = (*w)[i];
    if (!(wi >= 0.0) || !std::isfinite(wi)) throw DomainError("weights must be finite and >= 0");
    sw += wi;
    s += wi * err[i];
  }
  if (!(sw > 0.0)) throw DomainError("weights are all zero");
  return s / sw;
}

PsnrResult finish(double mse_sum, std::size_t frames, double max_value) {
  PsnrResult r;
  r.mse = mse_sum / static_cast<double>(frames);
  r.exact_match = r.mse == 0.0;
  r.db = db_from_mse(r.mse, max_value);
  return r;
}

void check_sequences(const std::vector<Frame>& ref, const std::vector<Frame>& dist, double max_value) {
  if (ref.empty() || ref.size() != dist.size()) throw DomainError("sequences must be non-empty and equally long");
  if (!(max_value > 0.0)) throw ConfigError("peak value must be positive");
}

}  // namespace

PsnrResult psnr_weighted(const std::vector<Frame>& ref, const std::vector<Frame>& dist,
                         const std::vector<nn::Tensor>& weights, double max_value, ErrorSpace space) {
  check_sequences(ref, dist, max_value);
  double mse_sum = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    const nn::Tensor err = squared_error(ref[t], dist[t], space);
    mse_sum += weighted_mean(err.values(), weight_for(weights, t, ref.size()));
  }
  return finish(mse_sum, ref.size(), max_value);
}

PsnrResult psnr(const std::vector<Frame>& ref, const std::vector<Frame>& dist, double max_value,
                ErrorSpace space) {
  return psnr_weighted(ref, dist, {}, max_value, space);
}

nn::Tensor ws_weights(int width, int height) {
  if (width <= 0 || height <= 0) throw ConfigError("raster sides must be positive");
  nn::Tensor w({static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
  for (int y = 0; y < height; ++y) {
    const double c = std::cos((y + 0.5 - height / 2.0) * geom::kPi / height);
    for (int x = 0; x < width; ++x) w(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = c;
  }
  return w;
}

PsnrResult ws_psnr(const std::vector<Frame>& ref, const std::vector<Frame>& dist, double max_value,
                   ErrorSpace space) {
  check_sequences(ref, dist, max_value);
  return psnr_weighted(ref, dist, {ws_weights(ref.front().width(), ref.front().height())}, max_value, space);
}

SpherePointSet fibonacci_points(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("point set must be non-empty");
  SpherePointSet pts;
  pts.seed = seed;
  double offset = 0.0;
  if (seed != 0) {
    nn::Rng rng(seed);
    offset = std::uniform_real_distribution<double>(0.0, geom::kTwoPi)(rng);
  }
  const double golden = geom::kPi * (3.0 - std::sqrt(5.0));
  const double n = static_cast<double>(count);
  pts.directions.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double y = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double a = offset + golden * static_cast<double>(k);
    pts.directions.push_back({r * std::sin(a), y, r * std::cos(a)});
  }
  return pts;
}

PsnrResult spsnr(const std::vector<Frame>& ref, const std::vector<Frame>& dist, const SpherePointSet& pts,
                 const std::vector<nn::Tensor>& weights, double max_value, ErrorSpace space) {
  check_sequences(ref, dist, max_value);
  if (pts.directions.empty()) throw DomainError("spsnr: empty point set");
  const Frame& first = ref.front();
  const geom::GridConfig cfg{first.width(), first.height(), 1};
  std::vector<geom::PixelCoord> positions;
  positions.reserve(pts.size());
  for (const auto& d : pts.directions) positions.push_back(geom::raster_from_direction(first.format, d, cfg));

  std::vector<double> err(pts.size());
  nn::Tensor point_weights({pts.size()});
  double mse_sum = 0.0;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    if (ref[t].pixels.dims() != dist[t].pixels.dims() || ref[t].pixels.dims() != first.pixels.dims()) {
      throw DomainError("spsnr: frame shapes differ");
    }
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const auto a = bilinear_sample(ref[t], positions[k]);
      const auto b = bilinear_sample(dist[t], positions[k]);
      if (space == ErrorSpace::luma) {
        const double d = 0.299 * (a[0] - b[0]) + 0.587 * (a[1] - b[1]) + 0.114 * (a[2] - b[2]);
        err[k] = d * d;
      } else {
        err[k] = ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2])) / 3.0;
      }
    }
    const nn::Tensor* w = weight_for(weights, t, ref.size());
    if (w == nullptr) {
      mse_sum += weighted_mean(err, nullptr);
      continue;
    }
    if (w->rank() != 2 || w->dim(0) != static_cast<std::size_t>(first.height()) ||
        w->dim(1) != static_cast<std::size_t>(first.width())) {
      throw DomainError("spsnr: weight map does not match the frame size");
    }
    Frame wf(first.format, first.width(), first.height());
    for (std::size_t c = 0; c < 3; ++c) {
      std::copy(w->values().begin(), w->values().end(), wf.pixels.row(c).begin());
    }
    for (std::size_t k = 0; k < positions.size(); ++k) point_weights[k] = bilinear_sample(wf, positions[k])[0];
    mse_sum += weighted_mean(err, &point_weights);
  }
  return finish(mse_sum, ref.size(), max_value);
}

}  // namespace paver::metrics
