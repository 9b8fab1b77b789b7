#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "gevbev/scene.hpp"

using namespace gevbev;

namespace {

Scenario single_box_scenario() {
  Scenario s;
  s.roads.push_back({{-60, -5}, {60, -5}, {60, 5}, {-60, 5}});
  s.vehicles.push_back({10.0, 0.0, 0.8, 4.0, 2.0, 1.6, 0.0});
  s.vehicles.push_back({0.0, 0.0, 0.8, 4.4, 1.9, 1.6, 0.0});  // the sensor's own car
  AgentSpec a;
  a.is_ego = true;
  a.lidar.n_rays = 360;
  a.lidar.ring_radii = {3.0, 6.0, 9.0, 12.0, 20.0, 40.0};
  s.agents.push_back(a);
  s.seed = 11;
  return s;
}

bool segment_hits_box(Vec2 to, const std::vector<OrientedBox3>& boxes, Vec2 sensor) {
  for (int i = 1; i < 2000; ++i) {
    const Vec2 p = (i / 2000.0) * to;
    for (const OrientedBox3& b : boxes) {
      if (!b.contains_xy(sensor) && b.contains_xy(p)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("raycast hits the box front face") {
  const Scenario s = single_box_scenario();
  const PointCloud cloud = raycast(s, 0);
  bool found = false;
  for (const LidarPoint& p : cloud) {
    if (p.label != PointLabel::vehicle) continue;
    if (std::abs(p.y) < 1e-12 && p.x > 0) {
      CHECK(p.x == doctest::Approx(8.0));
      CHECK(p.z == doctest::Approx(0.8 - 2.0));
      found = true;
    }
    // Every vehicle return lies on the front face x = 8 with |y| <= 1.
    CHECK(p.x == doctest::Approx(8.0));
    CHECK(std::abs(p.y) <= 1.0 + 1e-9);
  }
  CHECK(found);
}

TEST_CASE("ground returns are not occluded") {
  const Scenario s = single_box_scenario();
  for (const LidarPoint& p : raycast(s, 0)) {
    if (p.label == PointLabel::vehicle) continue;
    CHECK(p.z == -2.0);
    CHECK_FALSE(segment_hits_box(p.xy(), s.vehicles, {0, 0}));
    CHECK((p.label == PointLabel::road) == s.on_road(p.xy()));
  }
}

TEST_CASE("open field gives every ring on every ray") {
  Scenario s = single_box_scenario();
  s.vehicles.clear();
  const PointCloud cloud = raycast(s, 0);
  CHECK(cloud.size() == 360u * 6u);
  for (const LidarPoint& p : cloud) CHECK(p.d == doctest::Approx(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z)));
}

TEST_CASE("raycast is deterministic and seed dependent") {
  Scenario s = single_box_scenario();
  const PointCloud a = raycast(s, 0), b = raycast(s, 0);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].intensity == b[i].intensity;
  CHECK(same);
  s.seed = 12;
  const PointCloud c = raycast(s, 0);
  CHECK(c[0].intensity != a[0].intensity);
}

TEST_CASE("cloud transforms invert") {
  const Scenario s = single_box_scenario();
  const PointCloud cloud = raycast(s, 0);
  const Pose2 pose{4.0, -3.0, 0.7};
  const PointCloud back = inverse_transform_cloud(transform_cloud(cloud, pose, 0.5), pose, 0.5);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); i += 37) {
    CHECK(back[i].x == doctest::Approx(cloud[i].x).epsilon(1e-12));
    CHECK(back[i].y == doctest::Approx(cloud[i].y).epsilon(1e-12));
    CHECK(back[i].z == doctest::Approx(cloud[i].z).epsilon(1e-12));
  }
}

TEST_CASE("scenario json roundtrip") {
  const Scenario s = single_box_scenario();
  const Scenario t = parse_scenario(scenario_to_json(s));
  CHECK(t.seed == s.seed);
  REQUIRE(t.vehicles.size() == s.vehicles.size());
  CHECK(t.vehicles[0].x == s.vehicles[0].x);
  CHECK(t.roads == s.roads);
  CHECK(t.agents[0].lidar.ring_radii == s.agents[0].lidar.ring_radii);
  CHECK(scenario_to_json(t) == scenario_to_json(s));
}

TEST_CASE("validation names the violated invariant") {
  Scenario s = single_box_scenario();
  CHECK_NOTHROW(validate(s));
  Scenario two_egos = s;
  two_egos.agents.push_back(s.agents[0]);
  CHECK_THROWS_AS(validate(two_egos), std::invalid_argument);
  Scenario off_road = s;
  off_road.agents[0].pose = {0.0, 30.0, 0.0};
  CHECK_THROWS_AS(validate(off_road), std::invalid_argument);
  Scenario bad_rings = s;
  bad_rings.agents[0].lidar.ring_radii = {5.0, 3.0};
  CHECK_THROWS_AS(validate(bad_rings), std::invalid_argument);
  Scenario bad_box = s;
  bad_box.vehicles[0].l = 0.0;
  CHECK_THROWS_AS(validate(bad_box), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario("{\"roads\": []}"), std::invalid_argument);
}

TEST_CASE("ground truth grids use cell-center membership in the grid frame") {
  const Scenario s = single_box_scenario();
  const GridSpec grid{-20.0, -20.0, 0.5, 80, 80};
  const Pose2 frame{1.0, 0.5, 0.3};
  const GroundTruthGrids gt = ground_truth_grids(s, grid, frame);
  for (std::size_t i = 0; i < grid.cell_count(); i += 7) {
    const Vec2 world = frame.apply(grid.cell_center(i));
    CHECK(static_cast<bool>(gt.road[i]) == s.on_road(world));
    bool in_box = false;
    for (const OrientedBox3& b : s.vehicles) in_box = in_box || b.contains_xy(world);
    CHECK(static_cast<bool>(gt.vehicle[i]) == in_box);
  }
}

TEST_CASE("default rings of a 2 m mount") {
  const std::vector<double> r = default_ring_radii(50.0);
  REQUIRE(r.size() > 10);
  CHECK(r.front() == doctest::Approx(2.0 / std::tan(30.67 * std::numbers::pi / 180.0)).epsilon(1e-3));
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
  CHECK(r.back() <= 50.0);
}

TEST_CASE("generated intersections validate and repeat") {
  SceneGenConfig cfg;
  cfg.n_agents = 3;
  const Scenario a = generate_intersection_scenario(cfg);
  CHECK_NOTHROW(validate(a));
  CHECK(a.agents.size() == 3u);
  CHECK(scenario_to_json(a) == scenario_to_json(generate_intersection_scenario(cfg)));
  cfg.seed = 2;
  CHECK(scenario_to_json(a) != scenario_to_json(generate_intersection_scenario(cfg)));
}

TEST_CASE("bundled scenario loads") {
  const Scenario s = load_scenario(std::string(GEVBEV_DATA_DIR) + "/occlusion_3agent.json");
  CHECK(s.agents.size() == 3u);
  CHECK(s.agents[s.ego_index()].is_ego);
  CHECK_THROWS(load_scenario("/nonexistent/scenario.json"));
}
