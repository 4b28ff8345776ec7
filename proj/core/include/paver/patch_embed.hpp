#pragma once

#include <array>
#include <cstddef>

#include "paver/geometry.hpp"
#include "paver/nn.hpp"
#include "paver/tensor.hpp"

namespace paver {

/// One RGB frame, channel-major [3, H, W], values nominally in [0, 1].
template <typename T>
struct BasicFrame {
  geom::Format format = geom::Format::erp;
  nn::BasicTensor<T> pixels;

  BasicFrame() = default;
  BasicFrame(geom::Format fmt, nn::BasicTensor<T> px);
  BasicFrame(geom::Format fmt, int width, int height, T fill = T{});

  int width() const { return static_cast<int>(pixels.dim(2)); }
  int height() const { return static_cast<int>(pixels.dim(1)); }
  T& at(int c, int y, int x) { return pixels(c, y, x); }
  const T& at(int c, int y, int x) const { return pixels(c, y, x); }
};

using Frame = BasicFrame<double>;
using FrameF = BasicFrame<float>;

/// Linear projection from a flattened (channel, tap-row, tap-col) patch to C channels.
template <typename T>
struct BasicEmbedParams {
  nn::BasicTensor<T> weight;  // [C, 3*S*S]
  nn::BasicTensor<T> bias;    // [C]

  std::size_t channels() const { return weight.rows(); }
};

using EmbedParams = BasicEmbedParams<double>;
using EmbedParamsF = BasicEmbedParams<float>;

EmbedParams init_embed_params(int patch, std::size_t channels, nn::Rng& rng, double stddev);
void collect_embed_params(EmbedParams& p, const std::string& prefix, nn::NamedParams& out);

/// Bilinear blend of the four neighbouring pixel centres. ERP wraps u modulo W
/// and reflects rows beyond a pole onto the opposite meridian (theta + pi);
/// CMP and TSP clamp to the edge of the face that contains p.
template <typename T>
std::array<T, 3> bilinear_sample(const BasicFrame<T>& frame, geom::PixelCoord p);

/// token_i = weight * flatten(samples at taps_i) + bias, one row per patch.
template <typename T>
nn::BasicTensor<T> deform_embed(const BasicFrame<T>& frame, const geom::OffsetTable& offsets,
                                const BasicEmbedParams<T>& params);

}  // namespace paver
