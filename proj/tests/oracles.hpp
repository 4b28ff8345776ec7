#pragma once

// Reference implementations used only by the tests. Each one is written
// directly from the defining formula, without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "paver/fusion.hpp"
#include "paver/patch_embed.hpp"
#include "paver/tensor.hpp"

namespace paver::oracle {

inline nn::Tensor random_tensor(nn::Dims dims, nn::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  nn::Tensor t(std::move(dims));
  for (double& x : t.storage()) x = u(rng);
  return t;
}

inline Frame random_frame(int w, int h, nn::Rng& rng, geom::Format f = geom::Format::erp) {
  return Frame(f, random_tensor({3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)}, rng, 0.0, 1.0));
}

// Cut every S x S block out of the raster, flatten channel-major, project.
template <typename T>
nn::BasicTensor<T> plain_patchify(const BasicFrame<T>& frame, int s, const BasicEmbedParams<T>& p) {
  const int w = frame.width() / s, h = frame.height() / s;
  const std::size_t c = p.weight.rows(), k = p.weight.cols();
  nn::BasicTensor<T> out({static_cast<std::size_t>(w * h), c});
  std::vector<T> flat(k);
  for (int r = 0; r < h; ++r) {
    for (int q = 0; q < w; ++q) {
      std::size_t n = 0;
      for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < s; ++y)
          for (int x = 0; x < s; ++x) flat[n++] = frame.at(ch, r * s + y, q * s + x);
      for (std::size_t o = 0; o < c; ++o) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += static_cast<double>(p.weight(o, j)) * static_cast<double>(flat[j]);
        out(static_cast<std::size_t>(r * w + q), o) = static_cast<T>(acc + static_cast<double>(p.bias[o]));
      }
    }
  }
  return out;
}

inline double sqdist(const double* a, const double* b, std::size_t c) {
  double s = 0.0;
  for (std::size_t k = 0; k < c; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// y_i^t by explicit loops over the three terms.
inline nn::Tensor direct_scores(const FusedFeatures& f, double alpha, double beta, double gamma) {
  const std::size_t t_count = f.local.dim(0), n = f.local.dim(1), c = f.local.dim(2);
  nn::Tensor y({t_count, n});
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> tmean(c, 0.0), smean(c, 0.0);
      for (std::size_t s = 0; s < t_count; ++s)
        for (std::size_t k = 0; k < c; ++k) tmean[k] += f.local(s, i, k) / static_cast<double>(t_count);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < c; ++k) smean[k] += f.local(t, j, k) / static_cast<double>(n);
      const double* x = &f.local(t, i, 0);
      y(t, i) = alpha * sqdist(x, &f.global(t, 0), c) + beta * sqdist(x, tmean.data(), c) +
                gamma * sqdist(x, smean.data(), c);
    }
  }
  return y;
}

// Mann-Whitney statistic of positives against every negative, ties one half.
inline double population_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double acc = 0.0;
  for (double p : pos)
    for (double q : neg) acc += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  return acc / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Midpoint quadrature of f(theta, phi) cos(phi) over the sphere.
template <typename F>
double sphere_integral(F f, int n_theta = 2048, int n_phi = 1024) {
  const double pi = std::numbers::pi;
  double s = 0.0;
  const double dt = 2.0 * pi / n_theta, dp = pi / n_phi;
  for (int j = 0; j < n_phi; ++j) {
    const double phi = -pi / 2 + (j + 0.5) * dp;
    double row = 0.0;
    for (int i = 0; i < n_theta; ++i) row += f((i + 0.5) * dt, phi);
    s += row * std::cos(phi) * dt * dp;
  }
  return s;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Plain-loop transformer pieces over [L, C] matrices.
inline nn::Tensor ln_rows(const nn::Tensor& x, const nn::LayerNormParams& p) {
  nn::Tensor y(x.dims());
  const std::size_t c = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double m = 0, v = 0;
    for (std::size_t k = 0; k < c; ++k) m += x(r, k);
    m /= static_cast<double>(c);
    for (std::size_t k = 0; k < c; ++k) v += (x(r, k) - m) * (x(r, k) - m);
    v /= static_cast<double>(c);
    for (std::size_t k = 0; k < c; ++k) y(r, k) = (x(r, k) - m) / std::sqrt(v + p.eps) * p.gain[k] + p.shift[k];
  }
  return y;
}

inline nn::Tensor affine(const nn::Tensor& x, const nn::LinearParams& p) {
  const std::size_t out = p.weight.rows(), in = p.weight.cols();
  nn::Tensor y({x.rows(), out});
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t o = 0; o < out; ++o) {
      double a = p.bias[o];
      for (std::size_t i = 0; i < in; ++i) a += p.weight(o, i) * x(r, i);
      y(r, o) = a;
    }
  return y;
}

inline nn::Tensor two_layer(const nn::Tensor& x, const nn::MlpParams& p) {
  nn::Tensor h = affine(x, p.fc1);
  for (double& v : h.storage()) v = 0.5 * v * std::erfc(-v / std::numbers::sqrt2);
  return affine(h, p.fc2);
}

inline nn::Tensor attention(const nn::Tensor& x, const nn::AttentionParams& p) {
  const nn::Tensor q = affine(x, p.q), k = affine(x, p.k), v = affine(x, p.v);
  const std::size_t l = x.rows(), c = x.cols(), d = c / static_cast<std::size_t>(p.n_heads);
  nn::Tensor merged({l, c});
  for (std::size_t h = 0; h < static_cast<std::size_t>(p.n_heads); ++h) {
    for (std::size_t i = 0; i < l; ++i) {
      std::vector<double> w(l);
      double mx = -1e300, sum = 0;
      for (std::size_t j = 0; j < l; ++j) {
        double s = 0;
        for (std::size_t e = h * d; e < (h + 1) * d; ++e) s += q(i, e) * k(j, e);
        w[j] = s / std::sqrt(static_cast<double>(d));
        mx = std::max(mx, w[j]);
      }
      for (double& x_ : w) sum += (x_ = std::exp(x_ - mx));
      for (std::size_t e = h * d; e < (h + 1) * d; ++e) {
        double a = 0;
        for (std::size_t j = 0; j < l; ++j) a += w[j] / sum * v(j, e);
        merged(i, e) = a;
      }
    }
  }
  return affine(merged, p.o);
}

inline nn::Tensor plus(const nn::Tensor& a, const nn::Tensor& b, double s = 1.0) {
  nn::Tensor y = a;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * b[i];
  return y;
}

}  // namespace paver::oracle
