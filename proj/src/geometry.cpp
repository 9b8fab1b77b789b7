#include "gevbev/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace gevbev {

bool point_in_polygon(Vec2 p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double signed_area(const Polygon& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    twice += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * twice;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool is_simple_polygon(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  if (signed_area(poly) == 0.0) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = poly[i], a2 = poly[(i + 1) % n];
    if (a1 == a2) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      const Vec2 b1 = poly[j], b2 = poly[(j + 1) % n];
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon output = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Vec2 a = clip[e], b = clip[(e + 1) % m];
    const Vec2 edge = b - a;
    Polygon input = std::move(output);
    output.clear();
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 cur = input[i];
      const Vec2 prev = input[(i + n - 1) % n];
      const double side_cur = cross(edge, cur - a);
      const double side_prev = cross(edge, prev - a);
      const bool cur_in = side_cur >= 0.0;
      const bool prev_in = side_prev >= 0.0;
      if (cur_in != prev_in) {
        const double t = side_prev / (side_prev - side_cur);
        output.push_back(prev + t * (cur - prev));
      }
      if (cur_in) output.push_back(cur);
    }
  }
  return output;
}

double ray_convex_entry(Vec2 origin, Vec2 dir, const Polygon& convex_ccw) {
  // Cyrus-Beck: each edge is a half-plane cross(edge, p - a) >= 0.
  double t_enter = 0.0;
  double t_exit = std::numeric_limits<double>::infinity();
  const std::size_t n = convex_ccw.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = convex_ccw[i], b = convex_ccw[(i + 1) % n];
    const Vec2 edge = b - a;
    const double num = cross(edge, origin - a);
    const double den = cross(edge, dir);
    if (den == 0.0) {
      if (num < 0.0) return -1.0;
      continue;
    }
    const double t = -num / den;
    if (den > 0.0) {
      t_enter = std::max(t_enter, t);
    } else {
      t_exit = std::min(t_exit, t);
    }
    if (t_enter > t_exit) return -1.0;
  }
  return t_enter > 0.0 ? t_enter : -1.0;
}

Polygon OrientedBox3::footprint() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hl = 0.5 * l, hw = 0.5 * w;
  const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  Polygon out;
  out.reserve(4);
  for (const Vec2& p : local) {
    out.push_back({x + c * p.x - s * p.y, y + s * p.x + c * p.y});
  }
  return out;
}

bool OrientedBox3::contains_xy(Vec2 p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double dx = p.x - x, dy = p.y - y;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * l && std::abs(ly) <= 0.5 * w;
}

GridSpec GridSpec::centered(double half_extent, double resolution) {
  if (!(resolution > 0.0) || !(half_extent > 0.0)) {
    throw std::invalid_argument("grid resolution and extent must be positive");
  }
  const int n = static_cast<int>(std::lround(2.0 * half_extent / resolution));
  return {-half_extent, -half_extent, resolution, n, n};
}

}  // namespace gevbev
