#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gevbev/geometry.hpp"

namespace gevbev {

enum class PointLabel : std::uint8_t { road = 0, vehicle = 1, other = 2 };

/// One LiDAR measurement with the input feature vector [x, y, z, d, cos, sin, i].
/// Coordinates are in the frame of the cloud (LiDAR-relative z). Free-space samples
/// carry intensity -1.
struct LidarPoint {
  double x{0.0}, y{0.0}, z{0.0};
  double d{0.0};
  double cos_theta{1.0}, sin_theta{0.0};
  double intensity{0.0};
  PointLabel label{PointLabel::other};

  bool is_free_space() const { return intensity == -1.0; }
  Vec2 xy() const { return {x, y}; }
};

inline constexpr double kFreeSpaceIntensity = -1.0;

/// Builds a point and derives d, cos and sin from the coordinates.
LidarPoint make_point(double x, double y, double z, double intensity, PointLabel label);

using PointCloud = std::vector<LidarPoint>;

struct LidarSpec {
  int n_rays{720};
  std::vector<double> ring_radii;
  double max_range{50.0};
  double mount_height{2.0};
};

struct AgentSpec {
  Pose2 pose;
  LidarSpec lidar;
  bool is_ego{false};
};

struct Scenario {
  std::vector<Polygon> roads;
  std::vector<OrientedBox3> vehicles;
  std::vector<AgentSpec> agents;
  std::uint64_t seed{0};

  std::size_t ego_index() const;
  bool on_road(Vec2 world) const;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& scenario);

/// Plan-view LiDAR emulation for one agent. Output is in that agent's LiDAR frame.
PointCloud raycast(const Scenario& scenario, std::size_t agent_index);

/// Re-expresses a cloud given in a sensor frame located at `sensor_in_target` (planar
/// pose) and `dz` metres above the target frame's z origin. d, cos and sin are
/// recomputed in the target frame.
PointCloud transform_cloud(const PointCloud& cloud, const Pose2& sensor_in_target, double dz);

/// Inverse of transform_cloud with the same arguments.
PointCloud inverse_transform_cloud(const PointCloud& cloud, const Pose2& sensor_in_target,
                                   double dz);

struct GroundTruthGrids {
  GridSpec grid;
  std::vector<std::uint8_t> road;
  std::vector<std::uint8_t> vehicle;
};

/// Binary road/vehicle masks by cell-center membership. `grid_frame` is the pose of the
/// grid's coordinate frame in the world (identity for a world-aligned grid).
GroundTruthGrids ground_truth_grids(const Scenario& scenario, const GridSpec& grid,
                                    const Pose2& grid_frame = {});

/// Road polygons and vehicle boxes re-expressed in the frame `frame` (world pose).
struct SceneGeometry {
  std::vector<Polygon> roads;
  std::vector<OrientedBox3> vehicles;

  bool on_road(Vec2 p) const;
  bool in_vehicle(Vec2 p) const;
};
SceneGeometry geometry_in_frame(const Scenario& scenario, const Pose2& frame);

/// Ground rings of a 32-beam sensor mounted at 2 m, clipped to `max_range`.
std::vector<double> default_ring_radii(double max_range);

struct SceneGenConfig {
  std::uint64_t seed{1};
  int n_vehicles{12};
  int n_agents{2};
  double road_half_width{6.0};
  double road_half_length{70.0};
};

/// Four-way intersection with randomly parked vehicles in the lanes and agents on the
/// road. Deterministic in the seed.
Scenario generate_intersection_scenario(const SceneGenConfig& cfg);

}  // namespace gevbev
