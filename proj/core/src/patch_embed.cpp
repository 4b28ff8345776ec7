#include "paver/patch_embed.hpp"

#include <cmath>

#include "paver/errors.hpp"

namespace paver {

namespace {

int wrap_index(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

// Value of ERP row `j` (already inside the raster) at continuous column u.
template <typename T>
double erp_row_value(const BasicFrame<T>& f, int c, int j, double u) {
  const int w = f.width();
  const double x0 = std::floor(u);
  const double fx = u - x0;
  const int i0 = wrap_index(static_cast<int>(x0), w);
  const int i1 = wrap_index(i0 + 1, w);
  if (fx == 0.0) return static_cast<double>(f.at(c, j, i0));
  return (1.0 - fx) * f.at(c, j, i0) + fx * f.at(c, j, i1);
}

// ERP pixel (i, j) with j possibly outside [0, H): rows beyond a pole come
// from the mirrored row on the opposite meridian.
template <typename T>
double erp_pixel(const BasicFrame<T>& f, int c, int i, int j) {
  const int w = f.width(), h = f.height();
  if (j >= 0 && j < h) return static_cast<double>(f.at(c, j, wrap_index(i, w)));
  const int mirrored = j < 0 ? -j : std::min(2 * h - j, h - 1);
  return erp_row_value(f, c, std::clamp(mirrored, 0, h - 1), i + 0.5 * w);
}

}  // namespace

template <typename T>
BasicFrame<T>::BasicFrame(geom::Format fmt, nn::BasicTensor<T> px) : format(fmt), pixels(std::move(px)) {
  if (pixels.rank() != 3 || pixels.dim(0) != 3) {
    throw ConfigError("frame tensor must be [3, H, W], got " + nn::dims_to_string(pixels.dims()));
  }
}

template <typename T>
BasicFrame<T>::BasicFrame(geom::Format fmt, int width, int height, T fill)
    : format(fmt),
      pixels({3, static_cast<std::size_t>(height), static_cast<std::size_t>(width)}, fill) {}

EmbedParams init_embed_params(int patch, std::size_t channels, nn::Rng& rng, double stddev) {
  const std::size_t fan_in = 3 * static_cast<std::size_t>(patch) * static_cast<std::size_t>(patch);
  return {nn::random_normal({channels, fan_in}, rng, stddev), nn::Tensor({channels})};
}

void collect_embed_params(EmbedParams& p, const std::string& prefix, nn::NamedParams& out) {
  out.emplace_back(prefix + ".weight", &p.weight);
  out.emplace_back(prefix + ".bias", &p.bias);
}

template <typename T>
std::array<T, 3> bilinear_sample(const BasicFrame<T>& frame, geom::PixelCoord p) {
  const double x0 = std::floor(p.u), y0 = std::floor(p.v);
  const double fx = p.u - x0, fy = p.v - y0;
  const int i0 = static_cast<int>(x0), j0 = static_cast<int>(y0);
  const double w00 = (1.0 - fx) * (1.0 - fy), w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy, w11 = fx * fy;
  std::array<T, 3> out{};

  if (frame.format == geom::Format::erp) {
    for (int c = 0; c < 3; ++c) {
      double acc = w00 * erp_pixel(frame, c, i0, j0);
      if (w10 != 0.0) acc += w10 * erp_pixel(frame, c, i0 + 1, j0);
      if (w01 != 0.0) acc += w01 * erp_pixel(frame, c, i0, j0 + 1);
      if (w11 != 0.0) acc += w11 * erp_pixel(frame, c, i0 + 1, j0 + 1);
      out[c] = static_cast<T>(acc);
    }
    return out;
  }

  geom::GridConfig cfg{frame.width(), frame.height(), 1};
  const geom::FaceRect rect = geom::face_rect(frame.format, p, cfg);
  const int ia = std::clamp(i0, rect.u0, rect.u1), ib = std::clamp(i0 + 1, rect.u0, rect.u1);
  const int ja = std::clamp(j0, rect.v0, rect.v1), jb = std::clamp(j0 + 1, rect.v0, rect.v1);
  for (int c = 0; c < 3; ++c) {
    double acc = w00 * frame.at(c, ja, ia);
    if (w10 != 0.0) acc += w10 * frame.at(c, ja, ib);
    if (w01 != 0.0) acc += w01 * frame.at(c, jb, ia);
    if (w11 != 0.0) acc += w11 * frame.at(c, jb, ib);
    out[c] = static_cast<T>(acc);
  }
  return out;
}

template <typename T>
nn::BasicTensor<T> deform_embed(const BasicFrame<T>& frame, const geom::OffsetTable& offsets,
                                const BasicEmbedParams<T>& params) {
  const geom::GridConfig& cfg = offsets.config();
  if (frame.width() != cfg.width || frame.height() != cfg.height) {
    throw ConfigError("frame is " + std::to_string(frame.width()) + "x" +
                      std::to_string(frame.height()) + " but offsets expect " +
                      std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
  }
  if (frame.format != offsets.format()) throw ConfigError("frame format differs from offset table format");
  const std::size_t taps = static_cast<std::size_t>(offsets.taps_per_patch());
  const std::size_t fan_in = 3 * taps;
  if (params.weight.rank() != 2 || params.weight.cols() != fan_in ||
      params.bias.size() != params.weight.rows()) {
    throw ConfigError("embedding weight " + nn::dims_to_string(params.weight.dims()) +
                      " does not match patch fan-in " + std::to_string(fan_in));
  }
  const std::size_t n = static_cast<std::size_t>(offsets.num_patches());
  const std::size_t channels = params.weight.rows();
  nn::BasicTensor<T> tokens({n, channels});
  std::vector<T> flat(fan_in);
  for (std::size_t i = 0; i < n; ++i) {
    const auto patch = offsets.patch_taps(static_cast<int>(i));
    for (std::size_t k = 0; k < taps; ++k) {
      const auto rgb = bilinear_sample(frame, patch[k]);
      for (std::size_t c = 0; c < 3; ++c) flat[c * taps + k] = rgb[c];
    }
    for (std::size_t o = 0; o < channels; ++o) {
      const T* w = params.weight.data() + o * fan_in;
      double acc = 0.0;
      for (std::size_t k = 0; k < fan_in; ++k) acc += static_cast<double>(w[k]) * static_cast<double>(flat[k]);
      tokens(i, o) = static_cast<T>(acc + static_cast<double>(params.bias[o]));
    }
  }
  return tokens;
}

template struct BasicFrame<double>;
template struct BasicFrame<float>;
template std::array<double, 3> bilinear_sample(const BasicFrame<double>&, geom::PixelCoord);
template std::array<float, 3> bilinear_sample(const BasicFrame<float>&, geom::PixelCoord);
template nn::BasicTensor<double> deform_embed(const BasicFrame<double>&, const geom::OffsetTable&,
                                              const BasicEmbedParams<double>&);
template nn::BasicTensor<float> deform_embed(const BasicFrame<float>&, const geom::OffsetTable&,
                                             const BasicEmbedParams<float>&);

}  // namespace paver
