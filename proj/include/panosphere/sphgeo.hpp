#pragma once

#include <array>
#include <cmath>
#include <string>

#include "panosphere/image.hpp"

namespace panosphere {
namespace sphgeo {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// (theta, phi): theta is the latitude angle in [0, pi] measured from the
/// zenith, phi the longitude in [0, 2*pi).
struct SphericalCoord {
  double theta = 0.0;
  double phi = 0.0;
};

inline double wrap_phi(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  return p;
}

inline SphericalCoord make_coord(double theta, double phi) {
  if (theta < 0.0 || theta > kPi)
    throw std::invalid_argument("SphericalCoord: theta outside [0, pi]");
  return SphericalCoord{theta, wrap_phi(phi)};
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 normalized(const Vec3& v) {
  double n = std::sqrt(dot(v, v));
  return Vec3{v.x / n, v.y / n, v.z / n};
}

/// Unit direction: +x at (theta=pi/2, phi=0), +y at phi=pi/2, +z at the zenith.
inline Vec3 direction(const SphericalCoord& c) {
  double st = std::sin(c.theta);
  return Vec3{st * std::cos(c.phi), st * std::sin(c.phi), std::cos(c.theta)};
}

inline SphericalCoord coord_from_direction(const Vec3& d) {
  Vec3 u = normalized(d);
  double z = u.z < -1.0 ? -1.0 : (u.z > 1.0 ? 1.0 : u.z);
  return SphericalCoord{std::acos(z), wrap_phi(std::atan2(u.y, u.x))};
}

enum class CubeFace : int { front = 0, right, back, left, ceil, floor };

inline const char* face_name(CubeFace f) {
  switch (f) {
    case CubeFace::front: return "front";
    case CubeFace::right: return "right";
    case CubeFace::back: return "back";
    case CubeFace::left: return "left";
    case CubeFace::ceil: return "ceil";
    case CubeFace::floor: return "floor";
  }
  return "?";
}

inline CubeFace face_from_name(const std::string& name) {
  for (int k = 0; k < 6; ++k)
    if (name == face_name(static_cast<CubeFace>(k)))
      return static_cast<CubeFace>(k);
  throw std::invalid_argument("unknown cube face: " + name);
}

namespace detail {

struct FaceBasis {
  Vec3 axis, e_u, e_v;
};

// u tracks increasing phi on the equatorial faces; v points down (-z).
inline const FaceBasis& face_basis(CubeFace f) {
  static const std::array<FaceBasis, 6> kBases = {{
      {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}},    // front
      {{0, 1, 0}, {-1, 0, 0}, {0, 0, -1}},   // right
      {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}},  // back
      {{0, -1, 0}, {1, 0, 0}, {0, 0, -1}},   // left
      {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}},     // ceil
      {{0, 0, -1}, {0, 1, 0}, {-1, 0, 0}},   // floor
  }};
  return kBases[static_cast<int>(f)];
}

}  // namespace detail

/// Pixel-center mapping from raster indices to the sphere:
/// theta = pi*(j+0.5)/N, phi = 2*pi*(i+0.5)/M.
inline SphericalCoord erp_to_sphere(int i, int j, int M, int N) {
  if (i < 0 || i >= M || j < 0 || j >= N)
    throw std::out_of_range("erp_to_sphere: pixel index outside raster");
  return SphericalCoord{kPi * (j + 0.5) / N, kTwoPi * (i + 0.5) / M};
}

struct CubePoint {
  CubeFace face = CubeFace::front;
  double u = 0.0;  // gnomonic coordinates in [-1, 1]
  double v = 0.0;
};

/// Face whose axis carries the largest |component| of the direction;
/// exact ties resolve in the order front > right > back > left > ceil > floor.
inline CubePoint sphere_to_cube(const SphericalCoord& coord) {
  Vec3 d = direction(coord);
  double m = std::max({std::fabs(d.x), std::fabs(d.y), std::fabs(d.z)});
  for (int k = 0; k < 6; ++k) {
    CubeFace f = static_cast<CubeFace>(k);
    const auto& basis = detail::face_basis(f);
    double axial = dot(d, basis.axis);
    if (axial == m)
      return CubePoint{f, dot(d, basis.e_u) / axial, dot(d, basis.e_v) / axial};
  }
  // unreachable for a unit direction
  throw std::logic_error("sphere_to_cube: no face selected");
}

inline SphericalCoord cube_to_sphere(const CubePoint& p) {
  const auto& basis = detail::face_basis(p.face);
  Vec3 d{basis.axis.x + p.u * basis.e_u.x + p.v * basis.e_v.x,
         basis.axis.y + p.u * basis.e_u.y + p.v * basis.e_v.y,
         basis.axis.z + p.u * basis.e_u.z + p.v * basis.e_v.z};
  return coord_from_direction(d);
}

/// Pixels of the ERP raster that project onto `face`. The six face masks
/// partition the raster.
inline MaskMap cube_face_mask(CubeFace face, int N, int M) {
  if (M != 2 * N)
    throw std::invalid_argument("cube_face_mask: expected M == 2N");
  MaskMap mask(N, M);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i)
      mask.set(j, i, sphere_to_cube(erp_to_sphere(i, j, M, N)).face == face);
  return mask;
}

/// Gnomonic viewport mask on the plane tangent at `center`: a pixel is given
/// iff its direction lies in the center's hemisphere and its tangent-plane
/// projection satisfies |x| <= tan(fov_x/2), |y| <= tan(fov_y/2).
inline MaskMap tangent_mask(const SphericalCoord& center, double fov_x,
                            double fov_y, int N, int M) {
  if (M != 2 * N)
    throw std::invalid_argument("tangent_mask: expected M == 2N");
  if (fov_x <= 0.0 || fov_x >= kPi || fov_y <= 0.0 || fov_y >= kPi)
    throw std::invalid_argument("tangent_mask: fov outside (0, pi)");

  Vec3 c = direction(center);
  // local frame at the center: east = d(dir)/dphi normalized, up = -d(dir)/dtheta
  Vec3 east{-std::sin(center.phi), std::cos(center.phi), 0.0};
  Vec3 up{-std::cos(center.theta) * std::cos(center.phi),
          -std::cos(center.theta) * std::sin(center.phi),
          std::sin(center.theta)};
  double lim_x = std::tan(fov_x / 2.0);
  double lim_y = std::tan(fov_y / 2.0);

  MaskMap mask(N, M);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < M; ++i) {
      Vec3 d = direction(erp_to_sphere(i, j, M, N));
      double axial = dot(d, c);
      if (axial <= 0.0) continue;
      double x = dot(d, east) / axial;
      double y = dot(d, up) / axial;
      mask.set(j, i, std::fabs(x) <= lim_x && std::fabs(y) <= lim_y);
    }
  }
  return mask;
}

/// Copies given pixels, replaces masked-out pixels by `fill`.
inline ErpImage apply_mask(const ErpImage& image, const MaskMap& mask,
                           const Rgb& fill = {0.0f, 0.0f, 0.0f}) {
  require_same_dims(image, mask, "apply_mask");
  ErpImage out = image;
  for (int j = 0; j < image.height; ++j)
    for (int i = 0; i < image.width; ++i)
      if (!mask.at(j, i))
        for (int c = 0; c < 3; ++c) out.at(j, i, c) = fill[c];
  return out;
}

/// Circularly shifts columns by `shift` (mod width); positive shifts move
/// content toward larger column indices.
inline ErpImage rotate_yaw(const ErpImage& image, int shift) {
  ErpImage out(image.height, image.width);
  int M = image.width;
  int s = ((shift % M) + M) % M;
  for (int j = 0; j < image.height; ++j)
    for (int i = 0; i < M; ++i) {
      int src = (i - s + M) % M;
      for (int c = 0; c < 3; ++c) out.at(j, i, c) = image.at(j, src, c);
    }
  return out;
}

/// Viewport selector: one of the six cube faces, or a tangent projection
/// with free center and field of view.
struct ViewSpec {
  enum class Kind { cube_face, tangent };
  Kind kind = Kind::cube_face;
  CubeFace face = CubeFace::front;
  SphericalCoord center{kPi / 2.0, 0.0};
  double fov_x = 2.0 * kPi / 3.0;  // 120 degrees
  double fov_y = 2.0 * kPi / 3.0;
};

inline MaskMap view_mask(const ViewSpec& view, int N, int M) {
  if (view.kind == ViewSpec::Kind::cube_face)
    return cube_face_mask(view.face, N, M);
  return tangent_mask(view.center, view.fov_x, view.fov_y, N, M);
}

}  // namespace sphgeo
}  // namespace panosphere
