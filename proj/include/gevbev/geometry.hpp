#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace gevbev {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Planar rigid transform. yaw is counterclockwise from +x.
struct Pose2 {
  double x{0.0};
  double y{0.0};
  double yaw{0.0};

  /// Local coordinates of this frame -> parent coordinates.
  Vec2 apply(Vec2 p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {x + c * p.x - s * p.y, y + s * p.x + c * p.y};
  }

  /// Parent coordinates -> local coordinates of this frame.
  Vec2 inverse_apply(Vec2 p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double dx = p.x - x, dy = p.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }

  /// This pose expressed in the local frame of `frame`.
  Pose2 relative_to(const Pose2& frame) const {
    const Vec2 p = frame.inverse_apply({x, y});
    return {p.x, p.y, wrap_angle(yaw - frame.yaw)};
  }
};

using Polygon = std::vector<Vec2>;

/// Crossing-number test. Points exactly on an edge may land on either side.
bool point_in_polygon(Vec2 p, const Polygon& poly);

/// Signed area, positive for counterclockwise vertex order.
double signed_area(const Polygon& poly);

/// True if no two non-adjacent edges intersect and there are at least three vertices.
bool is_simple_polygon(const Polygon& poly);

/// Sutherland-Hodgman clipping of `subject` by a convex, counterclockwise `clip`.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

/// Ray (origin + t * dir, t > 0) against a convex polygon. Returns the entry distance
/// in units of |dir|, or a negative value when the ray misses.
double ray_convex_entry(Vec2 origin, Vec2 dir, const Polygon& convex_ccw);

/// 3D box with a BEV footprint rotated by yaw about +z.
struct OrientedBox3 {
  double x{0.0}, y{0.0}, z{0.0};
  double l{1.0}, w{1.0}, h{1.0};
  double yaw{0.0};

  Vec2 center() const { return {x, y}; }
  /// Counterclockwise footprint corners.
  Polygon footprint() const;
  bool contains_xy(Vec2 p) const;
  double footprint_area() const { return l * w; }
};

/// Axis-aligned raster frame. Cell (col, row) covers
/// [origin_x + col*res, origin_x + (col+1)*res) x [origin_y + row*res, ...).
struct GridSpec {
  double origin_x{-50.0};
  double origin_y{-50.0};
  double resolution{0.4};
  int width{250};
  int height{250};

  std::size_t cell_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  Vec2 cell_center(int col, int row) const {
    return {origin_x + (col + 0.5) * resolution, origin_y + (row + 0.5) * resolution};
  }
  Vec2 cell_center(std::size_t idx) const {
    return cell_center(static_cast<int>(idx % static_cast<std::size_t>(width)),
                       static_cast<int>(idx / static_cast<std::size_t>(width)));
  }
  bool operator==(const GridSpec&) const = default;

  /// Square grid of `half_extent` around the origin, e.g. the [-50, 50] m detection range.
  static GridSpec centered(double half_extent, double resolution);
};

}  // namespace gevbev
