#pragma once

// Procedural spherical scenes rendered into any supported raster format.

#include <array>
#include <cstdint>
#include <vector>

#include "paver/geometry.hpp"
#include "paver/patch_embed.hpp"

namespace paver::synth {

using Rgb = std::array<double, 3>;

/// Soft blobs have a Gaussian falloff over `radius` (radians); hard ones are
/// squares of half-width `radius` on the tangent plane at their centre.
struct Blob {
  geom::SphereCoord center;
  double radius = 0.2;
  Rgb color{1.0, 1.0, 1.0};
  bool hard = false;
};

struct Scene {
  Rgb background{0.5, 0.5, 0.5};
  std::vector<Blob> blobs;
};

Rgb shade(const Scene& scene, const geom::Vec3& d);

/// Samples the scene at every pixel centre of a width x height raster.
Frame render(const Scene& scene, geom::Format format, int width, int height);

/// A bright square drifting east on a grey background, starting at a
/// seed-dependent longitude. Returns the scenes so tests know the truth.
std::vector<Scene> moving_square_scenes(std::size_t frames, std::uint64_t seed, double half_width = 0.3,
                                        double step = 0.15);

std::vector<Frame> moving_square_clip(geom::Format format, int width, int height, std::size_t frames,
                                      std::uint64_t seed);

/// Several coloured soft blobs at seed-dependent positions.
Scene random_blobs(std::size_t count, std::uint64_t seed);

}  // namespace paver::synth
