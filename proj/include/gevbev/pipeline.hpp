#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gevbev/augment.hpp"
#include "gevbev/coop.hpp"
#include "gevbev/evmap.hpp"
#include "gevbev/fit.hpp"
#include "gevbev/metrics.hpp"
#include "gevbev/scene.hpp"

namespace gevbev {

struct PipelineConfig {
  FreeSpaceConfig free_space;
  MapParams map_params;
  CenterInit road_init;
  CenterInit object_init;
  double center_voxel{0.4};
  double expand_radius{1.2};  ///< object layer only
  double expand_step{0.4};
  FitConfig road_fit{FitConfig::road_defaults()};
  FitConfig object_fit{FitConfig::object_defaults()};
  GridSpec grid{GridSpec::centered(50.0, 0.4)};
  std::vector<Layer> layers{Layer::road, Layer::object};

  static PipelineConfig defaults();
  bool has_layer(Layer layer) const;
};

struct LayerResult {
  Layer layer;
  EvidentialMap map;  ///< fitted
  TargetSet targets;
  std::vector<LossBreakdown> curve;
  LossBreakdown initial;
  LossBreakdown final;
  BevGrid grid;  ///< rasterized on the ego grid
};

struct AgentRun {
  std::size_t agent_index{0};
  Pose2 pose_in_ego;
  PointCloud cloud;  ///< measured plus free-space points, ego frame
  std::vector<LayerResult> layers;

  const LayerResult& layer(Layer l) const;
};

/// Every agent's maps on the shared ego grid, plus ground truth in that frame.
struct SceneRun {
  PipelineConfig cfg;
  std::size_t ego{0};
  std::vector<AgentRun> agents;  ///< scenario order
  GroundTruthGrids gt;
  SceneGeometry geometry;  ///< ego frame

  const AgentRun& ego_run() const { return agents[ego]; }
  const std::vector<std::uint8_t>& gt_mask(Layer l) const;
};

/// raycast -> free-space augmentation -> ego frame -> centers -> targets -> fit ->
/// rasterize, for every agent and layer. Agents and layers run in parallel; the result is
/// independent of the worker count.
SceneRun run_scene(const Scenario& scenario, const PipelineConfig& cfg);

struct CoopConfig {
  double u_coop{1.0};
  Strategy strategy{Strategy::all};
  std::uint32_t frame_id{0};
};

struct CoopOutcome {
  BevGrid fused;
  CellMask request;
  std::vector<CellMask> responses;               ///< per coop agent
  std::vector<std::uint32_t> agent_ids;          ///< per coop agent
  std::vector<std::vector<std::uint8_t>> wire;   ///< encoded CPM per coop agent
  std::size_t bytes{0};
};

/// Road cells as a coop agent believes them: observed with p_fg > p_bg on its road map.
CellMask predicted_road_mask(const BevGrid& road_grid);

/// Every coop agent answers `request` with an encoded CPM; the ego decodes and fuses them.
CoopOutcome cooperate(const SceneRun& run, Layer layer, const CellMask& request,
                      const CoopConfig& cfg);
CoopOutcome cooperate(const SceneRun& run, Layer layer, double u_ego, const CoopConfig& cfg);

struct LayerScores {
  double iou_all{0.0};
  double iou_obs{0.0};
};

LayerScores score(const BevGrid& grid, const std::vector<std::uint8_t>& gt, double u_thr);

/// Number of cells that received nonzero evidence yet ended with a higher uncertainty.
std::size_t fusion_violations(const BevGrid& before, const BevGrid& after);

struct SweepRow {
  double u_ego{0.0};
  Layer layer{Layer::road};
  std::size_t baseline_bytes{0};
  std::size_t selected_bytes{0};
  double iou_all{0.0};
  double iou_obs{0.0};
};

struct BaselineRow {
  Layer layer{Layer::road};
  std::size_t baseline_bytes{0};
  double iou_all{0.0};
  double iou_obs{0.0};
  double ego_only_iou_all{0.0};
  double ego_only_iou_obs{0.0};
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<BaselineRow> baselines;
  std::size_t fusion_violations{0};
};

/// The baseline answers an all-true request under the same strategy.
SweepResult sweep(const SceneRun& run, const std::vector<double>& u_egos, const CoopConfig& cfg,
                  double u_thr);

/// "0.5" or "lo:hi:step" (inclusive of hi up to rounding). Values are rounded to 1e-9.
std::vector<double> parse_u_spec(const std::string& spec);

/// Observed cells of `grid` as calibration samples. With `entropy` the uncertainty is the
/// normalized entropy of p_hat instead of K/S.
std::vector<CalibrationSample> calibration_samples(const BevGrid& grid,
                                                   const std::vector<std::uint8_t>& gt,
                                                   bool entropy);

}  // namespace gevbev
