#pragma once

#include <cstdint>

#include "gevbev/scene.hpp"

namespace gevbev {

struct Vec3 {
  double x{0.0}, y{0.0}, z{0.0};
};

/// Free-space sampling along LiDAR ray paths. Defaults are the published configuration.
struct FreeSpaceConfig {
  double h_fs{-1.5};  ///< max LiDAR-relative z of a kept sample (m)
  double d_fs{1.0};   ///< guard band before the hit point (m)
  double s_fs{6.0};   ///< step along the ray (m)
  double v_fs{0.2};   ///< voxel size of the final downsampling (m)
};

struct GeomAugConfig {
  double scale_lo{0.95};
  double scale_hi{1.05};
  bool flip_x{true};  ///< mirror across the x-axis (y -> -y)
  bool flip_y{true};  ///< mirror across the y-axis (x -> -x)
  bool random_rotation{true};
  double noise_sigma{0.2};
};

/// Marches every reflected point's ray from `lidar_origin` with step s_fs, keeps the
/// samples satisfying z <= h_fs and distance-to-hit >= d_fs, then voxel-downsamples them.
/// Input free-space points are ignored. All returned points have intensity -1.
PointCloud sample_free_space(const PointCloud& cloud, Vec3 lidar_origin,
                             const FreeSpaceConfig& cfg);

/// The raw candidates before downsampling, in input order.
PointCloud free_space_candidates(const PointCloud& cloud, Vec3 lidar_origin,
                                 const FreeSpaceConfig& cfg);

enum class VoxelMode { xyz, xy };

/// One centroid per occupied voxel, sorted by voxel key. Label is the majority label
/// (ties to the lowest enum value); a voxel is free space iff most members are.
PointCloud voxel_downsample(const PointCloud& points, double size, VoxelMode mode = VoxelMode::xyz);

/// Deterministic core of geometric_augment: rotate, flip, then scale.
PointCloud rigid_scale_transform(const PointCloud& cloud, double rotation, bool flip_x,
                                 bool flip_y, double scale);

/// Random rotation, flips, scale and per-axis Gaussian noise; deterministic in `seed`.
PointCloud geometric_augment(const PointCloud& cloud, const GeomAugConfig& cfg,
                             std::uint64_t seed);

}  // namespace gevbev
