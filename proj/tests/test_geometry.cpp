#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gevbev/geometry.hpp"

using namespace gevbev;

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3.0 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = a(rng);
    const double w = wrap_angle(x);
    CHECK(w > -std::numbers::pi);
    CHECK(w <= std::numbers::pi);
    CHECK(std::cos(w) == doctest::Approx(std::cos(x)).epsilon(1e-9));
    CHECK(std::sin(w) == doctest::Approx(std::sin(x)).epsilon(1e-9));
  }
}

TEST_CASE("pose apply and inverse") {
  const Pose2 p{3.0, -2.0, std::numbers::pi / 2};
  const Vec2 q = p.apply({1.0, 0.0});
  CHECK(q.x == doctest::Approx(3.0));
  CHECK(q.y == doctest::Approx(-1.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const Pose2 f{u(rng), u(rng), u(rng)};
    const Vec2 v{u(rng), u(rng)};
    const Vec2 back = f.inverse_apply(f.apply(v));
    CHECK(back.x == doctest::Approx(v.x).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(v.y).epsilon(1e-12));
    // relative_to composes with apply.
    const Pose2 g{u(rng), u(rng), u(rng)};
    const Pose2 rel = g.relative_to(f);
    const Vec2 w = f.apply(rel.apply(v));
    const Vec2 direct = g.apply(v);
    CHECK(w.x == doctest::Approx(direct.x).epsilon(1e-9));
    CHECK(w.y == doctest::Approx(direct.y).epsilon(1e-9));
  }
}

TEST_CASE("polygon basics") {
  const Polygon square{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  CHECK(signed_area(square) == 4.0);
  CHECK(point_in_polygon({1, 1}, square));
  CHECK_FALSE(point_in_polygon({3, 1}, square));
  CHECK(is_simple_polygon(square));
  CHECK_FALSE(is_simple_polygon({{0, 0}, {2, 2}, {2, 0}, {0, 2}}));
  CHECK_FALSE(is_simple_polygon({{0, 0}, {1, 0}}));
}

TEST_CASE("convex clipping of overlapping squares") {
  const Polygon a{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  const Polygon b{{1, 1}, {3, 1}, {3, 3}, {1, 3}};
  CHECK(std::abs(signed_area(clip_convex(a, b))) == doctest::Approx(1.0));
  const Polygon far{{5, 5}, {6, 5}, {6, 6}, {5, 6}};
  CHECK(clip_convex(a, far).size() < 3);
  // A square rotated by 45 degrees inside a larger one is untouched.
  const double r = std::sqrt(0.5);
  const Polygon diamond{{1 + r, 1}, {1, 1 + r}, {1 - r, 1}, {1, 1 - r}};
  CHECK(std::abs(signed_area(clip_convex(diamond, a))) == doctest::Approx(1.0));
}

TEST_CASE("ray against convex polygon") {
  const OrientedBox3 box{10.0, 0.0, 0.0, 4.0, 2.0, 1.0, 0.0};
  CHECK(ray_convex_entry({0, 0}, {1, 0}, box.footprint()) == doctest::Approx(8.0));
  CHECK(ray_convex_entry({0, 0}, {-1, 0}, box.footprint()) < 0.0);
  CHECK(ray_convex_entry({0, 0}, {0, 1}, box.footprint()) < 0.0);
  // Origin inside reports a miss.
  CHECK(ray_convex_entry({10, 0}, {1, 0}, box.footprint()) < 0.0);
  // Oblique ray through the front face at y = 0.5.
  const double t = ray_convex_entry({0, 0}, Vec2{8.0, 0.5}, box.footprint());
  CHECK(t == doctest::Approx(1.0));
}

TEST_CASE("oriented box footprint") {
  const OrientedBox3 b{1.0, 2.0, 0.0, 4.0, 2.0, 1.5, std::numbers::pi / 2};
  const Polygon fp = b.footprint();
  REQUIRE(fp.size() == 4);
  CHECK(signed_area(fp) == doctest::Approx(8.0));
  CHECK(b.contains_xy({1.0, 3.9}));
  CHECK_FALSE(b.contains_xy({2.5, 2.0}));
  CHECK(b.footprint_area() == 8.0);
}

TEST_CASE("grid spec indexing") {
  const GridSpec g = GridSpec::centered(50.0, 0.4);
  CHECK(g.width == 250);
  CHECK(g.height == 250);
  CHECK(g.origin_x == -50.0);
  CHECK(g.cell_count() == 62500u);
  const Vec2 c = g.cell_center(0, 0);
  CHECK(c.x == doctest::Approx(-49.8));
  CHECK(g.index(3, 2) == 2u * 250u + 3u);
  const Vec2 c2 = g.cell_center(g.index(3, 2));
  CHECK(c2.x == doctest::Approx(g.cell_center(3, 2).x));
  CHECK(c2.y == doctest::Approx(g.cell_center(3, 2).y));
  CHECK_THROWS(GridSpec::centered(50.0, 0.0));
}
