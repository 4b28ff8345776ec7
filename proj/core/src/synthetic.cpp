#include "paver/synthetic.hpp"

#include <cmath>
#include <random>

#include "paver/errors.hpp"

namespace paver::synth {

Rgb shade(const Scene& scene, const geom::Vec3& d) {
  Rgb c = scene.background;
  for (const Blob& b : scene.blobs) {
    double alpha = 0.0;
    if (b.hard) {
      const geom::Mat3 r = geom::rotation_matrix(b.center);
      // Local coordinates: transpose of r applied to d.
      const double x = r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2];
      const double y = r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2];
      const double z = r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2];
      const double lim = std::tan(b.radius);
      alpha = (z > 0.0 && std::abs(x) <= lim * z && std::abs(y) <= lim * z) ? 1.0 : 0.0;
    } else {
      const double psi = geom::angle_between(d, geom::direction(b.center));
      alpha = std::exp(-0.5 * (psi * psi) / (b.radius * b.radius));
    }
    for (int k = 0; k < 3; ++k) c[k] += alpha * (b.color[k] - c[k]);
  }
  return c;
}

Frame render(const Scene& scene, geom::Format format, int width, int height) {
  const geom::GridConfig cfg{width, height, 1};
  cfg.validate(format);
  Frame f(format, width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const geom::Vec3 d = geom::direction_from_raster(format, {static_cast<double>(x), static_cast<double>(y)}, cfg);
      const Rgb c = shade(scene, d);
      for (int k = 0; k < 3; ++k) f.at(k, y, x) = c[k];
    }
  }
  return f;
}

std::vector<Scene> moving_square_scenes(std::size_t frames, std::uint64_t seed, double half_width, double step) {
  std::mt19937_64 rng(seed);
  const double theta0 = std::uniform_real_distribution<double>(0.0, geom::kTwoPi)(rng);
  const double phi0 = std::uniform_real_distribution<double>(-0.4, 0.4)(rng);
  std::vector<Scene> scenes(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Blob sq;
    sq.center = geom::SphereCoord::normalized(theta0 + step * static_cast<double>(t), phi0);
    sq.radius = half_width;
    sq.color = {1.0, 1.0, 1.0};
    sq.hard = true;
    scenes[t].blobs.push_back(sq);
  }
  return scenes;
}

std::vector<Frame> moving_square_clip(geom::Format format, int width, int height, std::size_t frames,
                                      std::uint64_t seed) {
  std::vector<Frame> clip;
  for (const Scene& s : moving_square_scenes(frames, seed)) clip.push_back(render(s, format, width, height));
  return clip;
}

Scene random_blobs(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Scene s;
  for (std::size_t i = 0; i < count; ++i) {
    Blob b;
    b.center = geom::SphereCoord::normalized(geom::kTwoPi * u01(rng), std::asin(2.0 * u01(rng) - 1.0));
    b.radius = 0.15 + 0.35 * u01(rng);
    b.color = {u01(rng), u01(rng), u01(rng)};
    s.blobs.push_back(b);
  }
  return s;
}

}  // namespace paver::synth
