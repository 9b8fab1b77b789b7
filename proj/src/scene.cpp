#include "gevbev/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gevbev/random.hpp"
#include "json.hpp"

namespace gevbev {

LidarPoint make_point(double x, double y, double z, double intensity, PointLabel label) {
  LidarPoint p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.d = std::sqrt(x * x + y * y + z * z);
  const double r = std::hypot(x, y);
  if (r > 0.0) {
    p.cos_theta = x / r;
    p.sin_theta = y / r;
  }
  p.intensity = intensity;
  p.label = label;
  return p;
}

std::size_t Scenario::ego_index() const {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].is_ego) return i;
  }
  throw std::invalid_argument("scenario has no ego agent");
}

bool Scenario::on_road(Vec2 world) const {
  return std::any_of(roads.begin(), roads.end(),
                     [&](const Polygon& poly) { return point_in_polygon(world, poly); });
}

void validate(const Scenario& scenario) {
  for (std::size_t i = 0; i < scenario.roads.size(); ++i) {
    if (!is_simple_polygon(scenario.roads[i])) {
      throw std::invalid_argument("road polygon " + std::to_string(i) +
                                  " is not simple or has fewer than 3 vertices");
    }
  }
  for (std::size_t i = 0; i < scenario.vehicles.size(); ++i) {
    const OrientedBox3& b = scenario.vehicles[i];
    if (!(b.l > 0.0 && b.w > 0.0 && b.h > 0.0)) {
      throw std::invalid_argument("vehicle " + std::to_string(i) + " has non-positive dims");
    }
    if (!(b.yaw > -std::numbers::pi && b.yaw <= std::numbers::pi)) {
      throw std::invalid_argument("vehicle " + std::to_string(i) + " yaw outside (-pi, pi]");
    }
  }
  if (scenario.agents.empty()) throw std::invalid_argument("scenario has no agents");
  const auto n_ego = std::count_if(scenario.agents.begin(), scenario.agents.end(),
                                   [](const AgentSpec& a) { return a.is_ego; });
  if (n_ego != 1) throw std::invalid_argument("scenario must have exactly one ego agent");
  for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
    const AgentSpec& a = scenario.agents[i];
    const std::string tag = "agent " + std::to_string(i);
    if (!scenario.on_road({a.pose.x, a.pose.y})) {
      throw std::invalid_argument(tag + " pose is not on a road polygon");
    }
    const LidarSpec& l = a.lidar;
    if (l.n_rays < 4) throw std::invalid_argument(tag + " lidar needs at least 4 rays");
    if (!(l.max_range > 0.0)) throw std::invalid_argument(tag + " lidar max_range must be > 0");
    for (std::size_t r = 0; r < l.ring_radii.size(); ++r) {
      if (!(l.ring_radii[r] > 0.0) || l.ring_radii[r] > l.max_range) {
        throw std::invalid_argument(tag + " ring radius outside (0, max_range]");
      }
      if (r > 0 && !(l.ring_radii[r] > l.ring_radii[r - 1])) {
        throw std::invalid_argument(tag + " ring radii must be strictly increasing");
      }
    }
  }
}

namespace {

using nlohmann::json;

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  try {
    for (const json& road : root.at("roads")) {
      Polygon poly;
      for (const json& v : road) poly.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      s.roads.push_back(std::move(poly));
    }
    for (const json& v : root.at("vehicles")) {
      s.vehicles.push_back({require_number(v, "x"), require_number(v, "y"),
                            require_number(v, "z"), require_number(v, "l"),
                            require_number(v, "w"), require_number(v, "h"),
                            require_number(v, "yaw")});
    }
    for (const json& a : root.at("agents")) {
      AgentSpec agent;
      agent.pose = {require_number(a, "x"), require_number(a, "y"), require_number(a, "yaw")};
      agent.is_ego = a.at("is_ego").get<bool>();
      const json& l = a.at("lidar");
      agent.lidar.n_rays = l.at("n_rays").get<int>();
      agent.lidar.ring_radii = l.at("ring_radii").get<std::vector<double>>();
      agent.lidar.max_range = require_number(l, "max_range");
      agent.lidar.mount_height = require_number(l, "mount_height");
      s.agents.push_back(std::move(agent));
    }
    s.seed = root.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed scenario: ") + e.what());
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json root;
  root["roads"] = json::array();
  for (const Polygon& poly : s.roads) {
    json road = json::array();
    for (const Vec2& v : poly) road.push_back({v.x, v.y});
    root["roads"].push_back(road);
  }
  root["vehicles"] = json::array();
  for (const OrientedBox3& b : s.vehicles) {
    root["vehicles"].push_back(
        {{"x", b.x}, {"y", b.y}, {"z", b.z}, {"l", b.l}, {"w", b.w}, {"h", b.h}, {"yaw", b.yaw}});
  }
  root["agents"] = json::array();
  for (const AgentSpec& a : s.agents) {
    root["agents"].push_back({{"x", a.pose.x},
                              {"y", a.pose.y},
                              {"yaw", a.pose.yaw},
                              {"is_ego", a.is_ego},
                              {"lidar",
                               {{"n_rays", a.lidar.n_rays},
                                {"ring_radii", a.lidar.ring_radii},
                                {"max_range", a.lidar.max_range},
                                {"mount_height", a.lidar.mount_height}}}});
  }
  root["seed"] = s.seed;
  return root.dump(2);
}

PointCloud raycast(const Scenario& scenario, std::size_t agent_index) {
  if (agent_index >= scenario.agents.size()) {
    throw std::out_of_range("agent index out of range");
  }
  const AgentSpec& agent = scenario.agents[agent_index];
  const LidarSpec& lidar = agent.lidar;

  struct Obstacle {
    Polygon footprint;
    double z_mid;
  };
  std::vector<Obstacle> obstacles;
  for (const OrientedBox3& box : scenario.vehicles) {
    // The sensor's own vehicle never occludes it.
    if (box.contains_xy(agent.pose.apply({0.0, 0.0}))) continue;
    Polygon local;
    for (const Vec2& c : box.footprint()) local.push_back(agent.pose.inverse_apply(c));
    obstacles.push_back({std::move(local), box.z});
  }

  std::mt19937_64 rng(mix_seed(scenario.seed, seed_stream::raycast + agent_index));
  std::uniform_real_distribution<double> ground_intensity(0.05, 0.3);
  std::uniform_real_distribution<double> vehicle_intensity(0.4, 0.9);

  PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(lidar.n_rays) * (lidar.ring_radii.size() + 1));
  const double step = 2.0 * std::numbers::pi / lidar.n_rays;
  for (int k = 0; k < lidar.n_rays; ++k) {
    const double bearing = k * step;
    const Vec2 dir{std::cos(bearing), std::sin(bearing)};
    double t_hit = std::numeric_limits<double>::infinity();
    double z_hit = 0.0;
    for (const Obstacle& ob : obstacles) {
      const double t = ray_convex_entry({0.0, 0.0}, dir, ob.footprint);
      if (t > 0.0 && t < t_hit) {
        t_hit = t;
        z_hit = ob.z_mid - lidar.mount_height;
      }
    }
    for (double r : lidar.ring_radii) {
      if (r >= t_hit || r > lidar.max_range) break;
      const Vec2 local = r * dir;
      const bool road = scenario.on_road(agent.pose.apply(local));
      cloud.push_back(make_point(local.x, local.y, -lidar.mount_height, ground_intensity(rng),
                                 road ? PointLabel::road : PointLabel::other));
    }
    if (t_hit < lidar.max_range) {
      const Vec2 local = t_hit * dir;
      cloud.push_back(
          make_point(local.x, local.y, z_hit, vehicle_intensity(rng), PointLabel::vehicle));
    }
  }
  return cloud;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose2& sensor_in_target, double dz) {
  PointCloud out;
  out.reserve(cloud.size());
  for (const LidarPoint& p : cloud) {
    const Vec2 q = sensor_in_target.apply(p.xy());
    out.push_back(make_point(q.x, q.y, p.z + dz, p.intensity, p.label));
  }
  return out;
}

PointCloud inverse_transform_cloud(const PointCloud& cloud, const Pose2& sensor_in_target,
                                   double dz) {
  PointCloud out;
  out.reserve(cloud.size());
  for (const LidarPoint& p : cloud) {
    const Vec2 q = sensor_in_target.inverse_apply(p.xy());
    out.push_back(make_point(q.x, q.y, p.z - dz, p.intensity, p.label));
  }
  return out;
}

bool SceneGeometry::on_road(Vec2 p) const {
  return std::any_of(roads.begin(), roads.end(),
                     [&](const Polygon& poly) { return point_in_polygon(p, poly); });
}

bool SceneGeometry::in_vehicle(Vec2 p) const {
  return std::any_of(vehicles.begin(), vehicles.end(),
                     [&](const OrientedBox3& b) { return b.contains_xy(p); });
}

SceneGeometry geometry_in_frame(const Scenario& scenario, const Pose2& frame) {
  SceneGeometry g;
  for (const Polygon& poly : scenario.roads) {
    Polygon local;
    for (const Vec2& v : poly) local.push_back(frame.inverse_apply(v));
    g.roads.push_back(std::move(local));
  }
  for (const OrientedBox3& b : scenario.vehicles) {
    OrientedBox3 local = b;
    const Vec2 c = frame.inverse_apply(b.center());
    local.x = c.x;
    local.y = c.y;
    local.yaw = wrap_angle(b.yaw - frame.yaw);
    g.vehicles.push_back(local);
  }
  return g;
}

GroundTruthGrids ground_truth_grids(const Scenario& scenario, const GridSpec& grid,
                                    const Pose2& grid_frame) {
  if (!(grid.resolution > 0.0)) throw std::invalid_argument("grid resolution must be > 0");
  const SceneGeometry geo = geometry_in_frame(scenario, grid_frame);
  GroundTruthGrids gt{grid, std::vector<std::uint8_t>(grid.cell_count(), 0),
                      std::vector<std::uint8_t>(grid.cell_count(), 0)};
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      const Vec2 c = grid.cell_center(col, row);
      const std::size_t i = grid.index(col, row);
      gt.road[i] = geo.on_road(c) ? 1 : 0;
      gt.vehicle[i] = geo.in_vehicle(c) ? 1 : 0;
    }
  }
  return gt;
}

std::vector<double> default_ring_radii(double max_range) {
  // Beams below the horizon from -30.67 deg in 1.33 deg steps.
  std::vector<double> radii;
  constexpr double mount = 2.0;
  for (int i = 0; i < 23; ++i) {
    const double elevation = (30.67 - 1.33 * i) * std::numbers::pi / 180.0;
    const double r = mount / std::tan(elevation);
    if (r <= max_range) radii.push_back(std::round(r * 1000.0) / 1000.0);
  }
  return radii;
}

Scenario generate_intersection_scenario(const SceneGenConfig& cfg) {
  Scenario s;
  s.seed = cfg.seed;
  const double hw = cfg.road_half_width, hl = cfg.road_half_length;
  s.roads.push_back({{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}});
  s.roads.push_back({{-hw, -hl}, {hw, -hl}, {hw, hl}, {-hw, hl}});

  std::mt19937_64 rng(mix_seed(cfg.seed, seed_stream::scene_generation));
  std::uniform_real_distribution<double> along(-0.7 * hl, 0.7 * hl);
  std::uniform_int_distribution<int> pick(0, 3);
  const double lane = 0.5 * hw;

  // Lane k: 0/1 on the x road (+/- direction), 2/3 on the y road.
  auto lane_box = [&](int k, double t) {
    OrientedBox3 b;
    b.l = 4.41;
    b.w = 1.98;
    b.h = 1.64;
    b.z = 0.5 * b.h;
    switch (k) {
      case 0: b.x = t; b.y = -lane; b.yaw = 0.0; break;
      case 1: b.x = t; b.y = lane; b.yaw = std::numbers::pi; break;
      case 2: b.x = lane; b.y = t; b.yaw = 0.5 * std::numbers::pi; break;
      default: b.x = -lane; b.y = t; b.yaw = -0.5 * std::numbers::pi; break;
    }
    return b;
  };
  auto overlaps_existing = [&](const OrientedBox3& b) {
    return std::any_of(s.vehicles.begin(), s.vehicles.end(), [&](const OrientedBox3& o) {
      return (o.center() - b.center()).norm() < 6.0;
    });
  };

  std::vector<double> radii = default_ring_radii(50.0);
  int placed = 0;
  for (int attempt = 0; attempt < 1000 && placed < cfg.n_agents; ++attempt) {
    OrientedBox3 b = lane_box(pick(rng), along(rng));
    if (overlaps_existing(b)) continue;
    s.vehicles.push_back(b);
    AgentSpec a;
    a.pose = {b.x, b.y, b.yaw};
    a.lidar = {720, radii, 50.0, 2.0};
    a.is_ego = placed == 0;
    s.agents.push_back(a);
    ++placed;
  }
  for (int attempt = 0, n = 0; attempt < 1000 && n < cfg.n_vehicles; ++attempt) {
    OrientedBox3 b = lane_box(pick(rng), along(rng));
    if (overlaps_existing(b)) continue;
    s.vehicles.push_back(b);
    ++n;
  }
  return s;
}

}  // namespace gevbev
