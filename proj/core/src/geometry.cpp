#include "paver/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "paver/errors.hpp"

namespace paver::geom {

namespace {

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

enum Face : int { kFront = 0, kRight, kBack, kLeft, kTop, kBottom };

// Dominant cube face; ties go to the earliest face in declaration order.
Face cube_face(const Vec3& d) {
  const std::array<double, 6> score = {d[2], d[0], -d[2], -d[0], d[1], -d[1]};
  int best = 0;
  for (int f = 1; f < 6; ++f) {
    if (score[f] > score[best]) best = f;
  }
  return static_cast<Face>(best);
}

// In-face coordinates (a, b) in [-1, 1]^2; a grows to the right of the face
// image, b grows downwards.
std::array<double, 2> face_coords(Face face, const Vec3& d) {
  const double x = d[0], y = d[1], z = d[2];
  switch (face) {
    case kFront: return {x / z, -y / z};
    case kRight: return {-z / x, -y / x};
    case kBack: return {x / z, y / z};
    case kLeft: return {-z / x, y / x};
    case kTop: return {x / y, z / y};
    case kBottom: return {-x / y, z / y};
  }
  return {0.0, 0.0};
}

Vec3 face_direction(Face face, double a, double b) {
  switch (face) {
    case kFront: return normalize({a, -b, 1.0});
    case kRight: return normalize({1.0, -b, -a});
    case kBack: return normalize({-a, -b, -1.0});
    case kLeft: return normalize({-1.0, -b, a});
    case kTop: return normalize({a, 1.0, b});
    case kBottom: return normalize({a, -1.0, -b});
  }
  return {0.0, 0.0, 1.0};
}

// CMP layout: row 0 = front, right, back; row 1 = left, top, bottom.
constexpr std::array<std::array<int, 2>, 6> kCmpCell = {{{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}}};

PixelCoord cmp_from_direction(const Vec3& d, const GridConfig& cfg) {
  const double f = cfg.width / 3;
  const Face face = cube_face(d);
  const auto [a, b] = face_coords(face, d);
  const auto [cx, cy] = kCmpCell[face];
  return {cx * f + (a + 1.0) * 0.5 * f - 0.5, cy * f + (b + 1.0) * 0.5 * f - 0.5};
}

Vec3 cmp_to_direction(PixelCoord p, const GridConfig& cfg) {
  const int f = cfg.width / 3;
  const int cx = std::clamp(static_cast<int>(std::floor((p.u + 0.5) / f)), 0, 2);
  const int cy = std::clamp(static_cast<int>(std::floor((p.v + 0.5) / f)), 0, 1);
  const double a = 2.0 * (p.u + 0.5 - cx * f) / f - 1.0;
  const double b = 2.0 * (p.v + 0.5 - cy * f) / f - 1.0;
  const Face face = static_cast<Face>(cy * 3 + cx);
  return face_direction(face, a, b);
}

// TSP layout: left square = front face (90 deg gnomonic); right square = the
// rear five faces folded into a truncated pyramid. In the right square's
// coordinates (p, q) in [-1, 1]^2 the back face fills |p|, |q| <= 1/2 and the
// side faces fill the four trapezoids, with the front-face edge on the outer
// boundary. `depth` runs from 0 at the front edge to 1 at the back edge.
PixelCoord tsp_from_direction(const Vec3& d, const GridConfig& cfg) {
  const double f = cfg.height;
  const Face face = cube_face(d);
  const double x = d[0], y = d[1], z = d[2];
  if (face == kFront) {
    return {(x / z + 1.0) * 0.5 * f - 0.5, (-y / z + 1.0) * 0.5 * f - 0.5};
  }
  double p = 0.0, q = 0.0;
  switch (face) {
    case kBack:
      p = 0.5 * x / -z;
      q = 0.5 * -y / -z;
      break;
    case kRight: {
      const double depth = 0.5 * (1.0 - z / x);
      p = 1.0 - 0.5 * depth;
      q = (-y / x) * p;
      break;
    }
    case kLeft: {
      const double depth = 0.5 * (1.0 - z / -x);
      p = -(1.0 - 0.5 * depth);
      q = (-y / -x) * -p;
      break;
    }
    case kTop: {
      const double depth = 0.5 * (1.0 - z / y);
      q = -(1.0 - 0.5 * depth);
      p = (x / y) * -q;
      break;
    }
    case kBottom: {
      const double depth = 0.5 * (1.0 - z / -y);
      q = 1.0 - 0.5 * depth;
      p = (x / -y) * q;
      break;
    }
    default: break;
  }
  return {f + (p + 1.0) * 0.5 * f - 0.5, (q + 1.0) * 0.5 * f - 0.5};
}

Vec3 tsp_to_direction(PixelCoord px, const GridConfig& cfg) {
  const double f = cfg.height;
  if (px.u + 0.5 < f) {
    const double a = 2.0 * (px.u + 0.5) / f - 1.0;
    const double b = 2.0 * (px.v + 0.5) / f - 1.0;
    return normalize({a, -b, 1.0});
  }
  const double p = 2.0 * (px.u + 0.5 - f) / f - 1.0;
  const double q = 2.0 * (px.v + 0.5) / f - 1.0;
  const double ap = std::abs(p), aq = std::abs(q);
  if (ap <= 0.5 && aq <= 0.5) return normalize({2.0 * p, -2.0 * q, -1.0});
  if (ap >= aq) {
    const double depth = 2.0 * (1.0 - ap);
    const double t = q / ap;
    return p > 0.0 ? normalize({1.0, -t, 1.0 - 2.0 * depth}) : normalize({-1.0, -t, 1.0 - 2.0 * depth});
  }
  const double depth = 2.0 * (1.0 - aq);
  const double r = p / aq;
  return q < 0.0 ? normalize({r, 1.0, 1.0 - 2.0 * depth}) : normalize({r, -1.0, 1.0 - 2.0 * depth});
}

}  // namespace

SphereCoord SphereCoord::normalized(double theta, double phi) {
  return {wrap(theta, kTwoPi), std::clamp(phi, -kPi / 2.0, kPi / 2.0)};
}

std::string_view to_string(Format format) {
  switch (format) {
    case Format::erp: return "erp";
    case Format::cmp: return "cmp";
    case Format::tsp: return "tsp";
  }
  return "?";
}

Format parse_format(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "erp") return Format::erp;
  if (lower == "cmp") return Format::cmp;
  if (lower == "tsp") return Format::tsp;
  throw ConfigError("unknown format '" + std::string(name) + "' (expected erp, cmp or tsp)");
}

void GridConfig::validate(Format format) const {
  if (width <= 0 || height <= 0 || patch <= 0) {
    throw ConfigError("grid sides must be positive");
  }
  if (width % patch != 0 || height % patch != 0) {
    throw ConfigError("patch side " + std::to_string(patch) + " does not divide " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (format == Format::cmp && width / 3 * 3 != width) {
    throw ConfigError("CMP raster width must be 3 faces wide");
  }
  if (format == Format::cmp && width / 3 * 2 != height) {
    throw ConfigError("CMP raster must be a 3x2 grid of square faces");
  }
  if (format == Format::tsp && width != 2 * height) {
    throw ConfigError("TSP raster must be two square halves (W = 2H)");
  }
}

Vec3 direction(SphereCoord c) {
  const double cp = std::cos(c.phi);
  return {cp * std::sin(c.theta), std::sin(c.phi), cp * std::cos(c.theta)};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalize(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero vector");
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

SphereCoord sph_from_cart(const Vec3& v) {
  const double horiz = std::hypot(v[0], v[2]);
  if (horiz == 0.0 && v[1] == 0.0) throw DomainError("sph_from_cart: zero vector");
  const double phi = std::atan2(v[1], horiz);
  const double theta = horiz == 0.0 ? 0.0 : std::atan2(v[0], v[2]);
  return SphereCoord::normalized(theta, phi);
}

Mat3 rotation_matrix(SphereCoord c) {
  const double ct = std::cos(c.theta), st = std::sin(c.theta);
  const double cp = std::cos(c.phi), sp = std::sin(c.phi);
  // R_yaw(theta) about +y times R_pitch(phi) about +x (tilting +z towards +y).
  return {{{ct, -st * sp, st * cp}, {0.0, cp, sp}, {-st, -ct * sp, ct * cp}}};
}

double angle_between(const Vec3& a, const Vec3& b) {
  const Vec3 c = cross(a, b);
  return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

double geodesic_distance(SphereCoord a, SphereCoord b) {
  return angle_between(direction(a), direction(b));
}

PixelCoord er_from_sph(SphereCoord c, const GridConfig& cfg) {
  const double u = wrap(cfg.width * c.theta / kTwoPi, cfg.width);
  const double v = cfg.height * (0.5 - c.phi / kPi);
  return {u, v};
}

SphereCoord sph_from_er(PixelCoord p, const GridConfig& cfg) {
  return SphereCoord::normalized(kTwoPi * p.u / cfg.width, kPi * (0.5 - p.v / cfg.height));
}

PixelCoord raster_from_direction(Format format, const Vec3& d, const GridConfig& cfg) {
  switch (format) {
    case Format::erp: return er_from_sph(sph_from_cart(d), cfg);
    case Format::cmp: return cmp_from_direction(d, cfg);
    case Format::tsp: return tsp_from_direction(d, cfg);
  }
  throw ConfigError("unknown format");
}

Vec3 direction_from_raster(Format format, PixelCoord p, const GridConfig& cfg) {
  switch (format) {
    case Format::erp: return direction(sph_from_er(p, cfg));
    case Format::cmp: return cmp_to_direction(p, cfg);
    case Format::tsp: return tsp_to_direction(p, cfg);
  }
  throw ConfigError("unknown format");
}

FaceRect face_rect(Format format, PixelCoord p, const GridConfig& cfg) {
  switch (format) {
    case Format::erp: return {0, cfg.width - 1, 0, cfg.height - 1};
    case Format::cmp: {
      const int f = cfg.width / 3;
      const int cx = std::clamp(static_cast<int>(std::floor((p.u + 0.5) / f)), 0, 2);
      const int cy = std::clamp(static_cast<int>(std::floor((p.v + 0.5) / f)), 0, 1);
      return {cx * f, cx * f + f - 1, cy * f, cy * f + f - 1};
    }
    case Format::tsp: {
      const int f = cfg.height;
      const int cx = p.u + 0.5 < f ? 0 : 1;
      return {cx * f, cx * f + f - 1, 0, f - 1};
    }
  }
  throw ConfigError("unknown format");
}

TangentGrid tangent_grid(int side, double fov) {
  if (side < 1) throw ConfigError("tangent grid side must be >= 1");
  const double extent = std::tan(0.5 * fov);
  TangentGrid grid{side, {}};
  grid.points.reserve(static_cast<std::size_t>(side) * side);
  for (int row = 0; row < side; ++row) {
    // Exact zero at the centre tap of odd grids; the two halves mirror each other.
    const double y = extent * static_cast<double>(side - 1 - 2 * row) / side;
    for (int col = 0; col < side; ++col) {
      const double x = extent * static_cast<double>(2 * col + 1 - side) / side;
      grid.points.push_back({x, y, 1.0});
    }
  }
  return grid;
}

double patch_fov(const GridConfig& cfg) { return kTwoPi * cfg.patch / cfg.width; }

SphereCoord patch_center(const GridConfig& cfg, int index) {
  const int col = index % cfg.patches_x();
  const int row = index / cfg.patches_x();
  const double half = 0.5 * (cfg.patch - 1);
  return sph_from_er({col * cfg.patch + half, row * cfg.patch + half}, cfg);
}

std::vector<SphereCoord> patch_centers(const GridConfig& cfg) {
  std::vector<SphereCoord> centers;
  centers.reserve(static_cast<std::size_t>(cfg.num_patches()));
  for (int i = 0; i < cfg.num_patches(); ++i) centers.push_back(patch_center(cfg, i));
  return centers;
}

OffsetTable::OffsetTable(Format format, GridConfig cfg, std::vector<PixelCoord> taps)
    : format_(format), cfg_(cfg), taps_(std::move(taps)) {
  cfg_.validate(format_);
  const auto expected = static_cast<std::size_t>(cfg_.num_patches()) * cfg_.patch * cfg_.patch;
  if (taps_.size() != expected) {
    throw ConfigError("offset table has " + std::to_string(taps_.size()) + " taps, expected " +
                      std::to_string(expected));
  }
}

std::span<const PixelCoord> OffsetTable::patch_taps(int index) const {
  const auto n = static_cast<std::size_t>(taps_per_patch());
  return std::span<const PixelCoord>(taps_).subspan(static_cast<std::size_t>(index) * n, n);
}

std::vector<PixelCoord> tangent_patch_taps(Format format, const GridConfig& cfg,
                                           SphereCoord center) {
  const TangentGrid grid = tangent_grid(cfg.patch, patch_fov(cfg));
  const Mat3 rot = rotation_matrix(center);
  std::vector<PixelCoord> taps;
  taps.reserve(grid.points.size());
  for (const Vec3& point : grid.points) {
    taps.push_back(raster_from_direction(format, normalize(rot * point), cfg));
  }
  return taps;
}

OffsetTable compute_offset_table(const GridConfig& cfg, Format format) {
  cfg.validate(format);
  std::vector<PixelCoord> taps;
  taps.reserve(static_cast<std::size_t>(cfg.num_patches()) * cfg.patch * cfg.patch);
  for (int i = 0; i < cfg.num_patches(); ++i) {
    const auto patch = tangent_patch_taps(format, cfg, patch_center(cfg, i));
    taps.insert(taps.end(), patch.begin(), patch.end());
  }
  return OffsetTable(format, cfg, std::move(taps));
}

OffsetTable identity_offset_table(const GridConfig& cfg) {
  cfg.validate(Format::erp);
  std::vector<PixelCoord> taps;
  taps.reserve(static_cast<std::size_t>(cfg.num_patches()) * cfg.patch * cfg.patch);
  for (int i = 0; i < cfg.num_patches(); ++i) {
    const int col = i % cfg.patches_x();
    const int row = i / cfg.patches_x();
    for (int b = 0; b < cfg.patch; ++b) {
      for (int a = 0; a < cfg.patch; ++a) {
        taps.push_back({static_cast<double>(col * cfg.patch + a),
                        static_cast<double>(row * cfg.patch + b)});
      }
    }
  }
  return OffsetTable(Format::erp, cfg, std::move(taps));
}

}  // namespace paver::geom
