#include "gevbev/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <tuple>

namespace gevbev {

PointCloud free_space_candidates(const PointCloud& cloud, Vec3 lidar_origin,
                                 const FreeSpaceConfig& cfg) {
  if (!(cfg.s_fs > 0.0) || !(cfg.v_fs > 0.0) || !(cfg.d_fs >= 0.0)) {
    throw std::invalid_argument("free-space config requires s_fs > 0, v_fs > 0, d_fs >= 0");
  }
  PointCloud out;
  for (const LidarPoint& p : cloud) {
    if (p.is_free_space()) continue;
    const double dx = p.x - lidar_origin.x;
    const double dy = p.y - lidar_origin.y;
    const double dz = p.z - lidar_origin.z;
    const double length = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw std::invalid_argument("free-space sampling needs finite non-zero ray lengths");
    }
    const PointLabel label = p.label == PointLabel::vehicle ? PointLabel::other : p.label;
    for (int k = 1;; ++k) {
      const double s = k * cfg.s_fs;
      if (length - s < cfg.d_fs) break;
      const double t = s / length;
      const double z = lidar_origin.z + t * dz;
      if (z > cfg.h_fs) continue;
      out.push_back(make_point(lidar_origin.x + t * dx, lidar_origin.y + t * dy, z,
                               kFreeSpaceIntensity, label));
    }
  }
  return out;
}

PointCloud sample_free_space(const PointCloud& cloud, Vec3 lidar_origin,
                             const FreeSpaceConfig& cfg) {
  return voxel_downsample(free_space_candidates(cloud, lidar_origin, cfg), cfg.v_fs,
                          VoxelMode::xyz);
}

PointCloud voxel_downsample(const PointCloud& points, double size, VoxelMode mode) {
  if (!(size > 0.0)) throw std::invalid_argument("voxel size must be > 0");
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  struct Acc {
    double sx{0.0}, sy{0.0}, sz{0.0}, si{0.0};
    std::size_t n{0}, n_free{0};
    std::array<std::size_t, 3> labels{};
  };
  std::map<Key, Acc> voxels;
  for (const LidarPoint& p : points) {
    const Key key{static_cast<std::int64_t>(std::floor(p.x / size)),
                  static_cast<std::int64_t>(std::floor(p.y / size)),
                  mode == VoxelMode::xyz ? static_cast<std::int64_t>(std::floor(p.z / size)) : 0};
    Acc& a = voxels[key];
    a.sx += p.x;
    a.sy += p.y;
    a.sz += p.z;
    ++a.n;
    if (p.is_free_space()) {
      ++a.n_free;
    } else {
      a.si += p.intensity;
    }
    ++a.labels[static_cast<std::size_t>(p.label)];
  }
  PointCloud out;
  out.reserve(voxels.size());
  for (const auto& [key, a] : voxels) {
    const double n = static_cast<double>(a.n);
    const auto best = std::max_element(a.labels.begin(), a.labels.end());
    const auto label = static_cast<PointLabel>(best - a.labels.begin());
    const std::size_t n_measured = a.n - a.n_free;
    const double intensity = a.n_free > n_measured
                                 ? kFreeSpaceIntensity
                                 : a.si / static_cast<double>(n_measured);
    out.push_back(make_point(a.sx / n, a.sy / n, a.sz / n, intensity, label));
  }
  return out;
}

PointCloud rigid_scale_transform(const PointCloud& cloud, double rotation, bool flip_x,
                                 bool flip_y, double scale) {
  const double c = std::cos(rotation), s = std::sin(rotation);
  PointCloud out;
  out.reserve(cloud.size());
  for (const LidarPoint& p : cloud) {
    double x = c * p.x - s * p.y;
    double y = s * p.x + c * p.y;
    if (flip_x) y = -y;
    if (flip_y) x = -x;
    out.push_back(make_point(scale * x, scale * y, scale * p.z, p.intensity, p.label));
  }
  return out;
}

PointCloud geometric_augment(const PointCloud& cloud, const GeomAugConfig& cfg,
                             std::uint64_t seed) {
  if (cloud.empty()) throw std::invalid_argument("geometric_augment needs a non-empty cloud");
  if (!(cfg.scale_lo > 0.0 && cfg.scale_lo <= cfg.scale_hi)) {
    throw std::invalid_argument("scale range must satisfy 0 < lo <= hi");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::bernoulli_distribution coin(0.5);
  const double rotation = cfg.random_rotation ? angle(rng) : 0.0;
  const bool fx = cfg.flip_x && coin(rng);
  const bool fy = cfg.flip_y && coin(rng);
  const double scale =
      cfg.scale_lo == cfg.scale_hi
          ? cfg.scale_lo
          : std::uniform_real_distribution<double>(cfg.scale_lo, cfg.scale_hi)(rng);
  PointCloud out = rigid_scale_transform(cloud, rotation, fx, fy, scale);
  if (cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (LidarPoint& p : out) {
      const double x = p.x + noise(rng);
      const double y = p.y + noise(rng);
      const double z = p.z + noise(rng);
      p = make_point(x, y, z, p.intensity, p.label);
    }
  }
  return out;
}

}  // namespace gevbev
