#pragma once

// Sphere <-> raster geometry for equirectangular (ERP), cubemap (CMP) and
// truncated-square-pyramid (TSP) frames.
//
// Conventions:
//   direction(theta, phi) = (cos(phi) sin(theta), sin(phi), cos(phi) cos(theta))
//   y is up, +z is (theta = 0, phi = 0), theta grows towards +x.
//   Continuous pixel coordinates put pixel (i, j) at (u, v) = (i, j); a pixel
//   covers [i - 0.5, i + 0.5) horizontally.

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace paver::geom {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct SphereCoord {
  double theta = 0.0;  // longitude, [0, 2pi)
  double phi = 0.0;    // latitude, [-pi/2, pi/2]

  /// Wraps theta into [0, 2pi) and clamps phi to the closed latitude range.
  static SphereCoord normalized(double theta, double phi);
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

enum class Format : std::uint8_t { erp = 0, cmp = 1, tsp = 2 };

std::string_view to_string(Format format);
/// Accepts "erp", "cmp", "tsp" (case-insensitive). Throws ConfigError.
Format parse_format(std::string_view name);

/// Raster size and tangent patch side. Patch counts follow as W/S and H/S.
struct GridConfig {
  int width = 0;
  int height = 0;
  int patch = 0;

  int patches_x() const { return width / patch; }
  int patches_y() const { return height / patch; }
  int num_patches() const { return patches_x() * patches_y(); }

  /// Throws ConfigError unless all sides are positive, the patch side divides
  /// both raster sides, and the raster matches the format's face layout
  /// (CMP: 3x2 square faces, TSP: two squares side by side).
  void validate(Format format = Format::erp) const;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

Vec3 direction(SphereCoord c);
Vec3 normalize(const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
Vec3 operator*(const Mat3& m, const Vec3& v);

/// Throws DomainError on the zero vector. Returns theta = 0 at the poles.
SphereCoord sph_from_cart(const Vec3& v);

/// Proper rotation R = R_yaw(theta) * R_pitch(phi); R * (0,0,1) = direction(c).
Mat3 rotation_matrix(SphereCoord c);

/// Great-circle angle in [0, pi].
double geodesic_distance(SphereCoord a, SphereCoord b);
double angle_between(const Vec3& a, const Vec3& b);

PixelCoord er_from_sph(SphereCoord c, const GridConfig& cfg);
SphereCoord sph_from_er(PixelCoord p, const GridConfig& cfg);

/// Continuous raster position of a unit direction. Directions on a cube seam
/// resolve to the first face in the order front, right, back, left, top, bottom.
PixelCoord raster_from_direction(Format format, const Vec3& d, const GridConfig& cfg);
/// Inverse of raster_from_direction on the raster's pixel domain.
Vec3 direction_from_raster(Format format, PixelCoord p, const GridConfig& cfg);

/// Inclusive pixel-index bounds of the face that contains a raster position.
/// ERP has a single face spanning the whole raster.
struct FaceRect {
  int u0 = 0, u1 = 0, v0 = 0, v1 = 0;
};
FaceRect face_rect(Format format, PixelCoord p, const GridConfig& cfg);

/// S x S points (x, y, 1) on the z = 1 plane; row 0 is the top (+y) row.
struct TangentGrid {
  int side = 0;
  std::vector<Vec3> points;  // row-major
};
TangentGrid tangent_grid(int side, double fov);

/// Angular extent of one patch: it subtends exactly its equatorial ERP footprint.
double patch_fov(const GridConfig& cfg);
/// Centre of patch i (row-major over the w x h grid) on the longitude/latitude grid.
SphereCoord patch_center(const GridConfig& cfg, int index);
std::vector<SphereCoord> patch_centers(const GridConfig& cfg);

/// Per-patch, per-tap fractional pixel positions realising the tangent-plane
/// sampling of each patch in a given raster format. Immutable once built.
class OffsetTable {
 public:
  OffsetTable(Format format, GridConfig cfg, std::vector<PixelCoord> taps);

  Format format() const { return format_; }
  const GridConfig& config() const { return cfg_; }
  int num_patches() const { return cfg_.num_patches(); }
  int taps_per_patch() const { return cfg_.patch * cfg_.patch; }
  std::span<const PixelCoord> taps() const { return taps_; }
  std::span<const PixelCoord> patch_taps(int index) const;

  friend bool operator==(const OffsetTable&, const OffsetTable&) = default;

 private:
  Format format_;
  GridConfig cfg_;
  std::vector<PixelCoord> taps_;
};

/// Taps of a single tangent patch centred at `center`, in tap row-major order.
std::vector<PixelCoord> tangent_patch_taps(Format format, const GridConfig& cfg,
                                           SphereCoord center);

/// Throws ConfigError when the grid is invalid for the format.
OffsetTable compute_offset_table(const GridConfig& cfg, Format format);

/// The plain S x S pixel grid of each ERP patch (no deformation).
OffsetTable identity_offset_table(const GridConfig& cfg);

}  // namespace paver::geom
