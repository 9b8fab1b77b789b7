#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gevbev/edl.hpp"
#include "gevbev/evmap.hpp"
#include "gevbev/scene.hpp"

namespace gevbev {

struct TargetSet {
  std::vector<Vec2> points;
  std::vector<std::uint8_t> labels;  ///< class index (kFg / kBg) per point
  Layer layer{Layer::road};

  std::size_t size() const { return points.size(); }
  std::size_t count(std::size_t cls) const;
};

struct FitConfig {
  int n_tgt{10};             ///< shifted targets spawned per seed point
  double shift_sigma{3.0};   ///< per-axis std-dev of the shift (m)
  double voxel{0.4};         ///< target downsampling voxel (m); <= 0 disables
  std::size_t n_tgt_cap{3000};  ///< per-class cap (road layer)
  double box_margin{4.0};    ///< object layer: keep every target this close to a box edge
  std::size_t bg_per_gt{50};    ///< object layer: background samples per gt box
  double lr{0.05};
  int epochs{300};
  double a_max{10.0};
  Reduction reduction{Reduction::sum};

  static FitConfig road_defaults();
  static FitConfig object_defaults();
};

/// Target points for one layer, shifted from the cloud's seed points and labelled from the
/// scene geometry (in the cloud/map frame). Only targets within nu of some center survive.
/// Throws if none do.
TargetSet sample_targets(const PointCloud& cloud, const EvidentialMap& map,
                         const SceneGeometry& geometry, const FitConfig& cfg,
                         std::uint64_t seed);

struct FitResult {
  EvidentialMap map;
  std::vector<LossBreakdown> curve;  ///< per epoch, evaluated before that epoch's step
  std::vector<double> smoothed;      ///< running minimum of curve totals
  LossBreakdown initial;             ///< initial parameters under the final lambda
  LossBreakdown final;               ///< fitted parameters under the final lambda
};

/// Full-batch gradient descent of the evidential loss over every center's pre-activation
/// o_cls / o_var (ReLU activation, sub-gradient 0 at 0). Throws std::runtime_error if the
/// loss becomes non-finite.
FitResult fit_map(const EvidentialMap& map, const TargetSet& targets, const FitConfig& cfg);

/// Evidential loss of `map` on `targets` at annealing epoch `epoch`.
LossBreakdown evaluate_loss(const EvidentialMap& map, const TargetSet& targets,
                            const FitConfig& cfg, double epoch);

struct MapGradient {
  LossBreakdown loss;
  std::vector<double> cls;  ///< [center][class]
  std::vector<double> var;  ///< [center][class][axis]
};

/// Loss and its gradient with respect to every center's o_cls / o_var, taking the map's
/// current (non-negative) outputs as the pre-activations.
MapGradient loss_gradient(const EvidentialMap& map, const TargetSet& targets,
                          const FitConfig& cfg, double epoch);

/// epoch,total,sq,var,kl,lambda
void write_loss_csv(const std::vector<LossBreakdown>& curve, const std::filesystem::path& path);

}  // namespace gevbev
