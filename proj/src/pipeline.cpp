#include "gevbev/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gevbev/parallel.hpp"
#include "gevbev/random.hpp"

namespace gevbev {

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  // A zero pre-activation variance has zero ReLU sub-gradient and would never move.
  cfg.road_init.o_var = {0.05, 0.05};
  cfg.object_init.o_var = {0.05, 0.05};
  return cfg;
}

bool PipelineConfig::has_layer(Layer layer) const {
  return std::find(layers.begin(), layers.end(), layer) != layers.end();
}

const LayerResult& AgentRun::layer(Layer l) const {
  for (const LayerResult& r : layers) {
    if (r.layer == l) return r;
  }
  throw std::out_of_range(std::string("layer not computed: ") + layer_name(l));
}

const std::vector<std::uint8_t>& SceneRun::gt_mask(Layer l) const {
  return l == Layer::road ? gt.road : gt.vehicle;
}

namespace {

PointCloud agent_cloud(const Scenario& scenario, std::size_t agent, const PipelineConfig& cfg) {
  const PointCloud measured = raycast(scenario, agent);
  PointCloud merged = measured;
  const PointCloud free = sample_free_space(measured, Vec3{0.0, 0.0, 0.0}, cfg.free_space);
  merged.insert(merged.end(), free.begin(), free.end());
  const AgentSpec& a = scenario.agents[agent];
  const AgentSpec& ego = scenario.agents[scenario.ego_index()];
  return transform_cloud(merged, a.pose.relative_to(ego.pose),
                         a.lidar.mount_height - ego.lidar.mount_height);
}

LayerResult run_layer(const PointCloud& cloud, Layer layer, const SceneGeometry& geometry,
                      std::uint64_t seed, const PipelineConfig& cfg) {
  const bool road = layer == Layer::road;
  EvidentialMap map = build_from_cloud(cloud, layer, road ? cfg.road_init : cfg.object_init,
                                       cfg.map_params, cfg.center_voxel);
  if (!road && cfg.expand_radius > 0.0) {
    map = expand_centers(map, cfg.expand_radius, cfg.expand_step);
  }
  const FitConfig& fit_cfg = road ? cfg.road_fit : cfg.object_fit;
  TargetSet targets = sample_targets(cloud, map, geometry, fit_cfg, seed);
  FitResult fit = fit_map(map, targets, fit_cfg);
  BevGrid grid = rasterize(fit.map, cfg.grid);
  return LayerResult{layer,          std::move(fit.map), std::move(targets), std::move(fit.curve),
                     fit.initial,    fit.final,          std::move(grid)};
}

}  // namespace

SceneRun run_scene(const Scenario& scenario, const PipelineConfig& cfg) {
  validate(scenario);
  if (cfg.layers.empty()) throw std::invalid_argument("no layers selected");
  SceneRun run{cfg, scenario.ego_index(), {}, {}, {}};
  const Pose2 ego_pose = scenario.agents[run.ego].pose;
  run.gt = ground_truth_grids(scenario, cfg.grid, ego_pose);
  run.geometry = geometry_in_frame(scenario, ego_pose);

  const std::size_t n_agents = scenario.agents.size();
  std::vector<PointCloud> clouds(n_agents);
  parallel_for(n_agents, [&](std::size_t a) { clouds[a] = agent_cloud(scenario, a, cfg); });

  const std::size_t n_layers = cfg.layers.size();
  std::vector<std::optional<LayerResult>> results(n_agents * n_layers);
  parallel_for(results.size(), [&](std::size_t t) {
    const std::size_t a = t / n_layers;
    const Layer layer = cfg.layers[t % n_layers];
    const std::uint64_t stream =
        (layer == Layer::road ? seed_stream::road_targets : seed_stream::object_targets) + a;
    results[t] = run_layer(clouds[a], layer, run.geometry, mix_seed(scenario.seed, stream), cfg);
  });

  for (std::size_t a = 0; a < n_agents; ++a) {
    AgentRun agent;
    agent.agent_index = a;
    agent.pose_in_ego = scenario.agents[a].pose.relative_to(ego_pose);
    agent.cloud = std::move(clouds[a]);
    for (std::size_t l = 0; l < n_layers; ++l) {
      agent.layers.push_back(std::move(*results[a * n_layers + l]));
    }
    run.agents.push_back(std::move(agent));
  }
  return run;
}

CellMask predicted_road_mask(const BevGrid& road_grid) {
  CellMask m = CellMask::filled(road_grid.grid, false);
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    if (!road_grid.observed[i]) continue;
    const DirichletResult d = road_grid.cell(i);
    m.bits[i] = d.p_hat[kFg] > d.p_hat[kBg];
  }
  return m;
}

CoopOutcome cooperate(const SceneRun& run, Layer layer, const CellMask& request,
                      const CoopConfig& cfg) {
  const BevGrid& ego_grid = run.ego_run().layer(layer).grid;
  CoopOutcome out{ego_grid, request, {}, {}, {}, 0};
  std::vector<CpmPayload> received;
  for (const AgentRun& agent : run.agents) {
    if (agent.agent_index == run.ego) continue;
    const BevGrid& coop_grid = agent.layer(layer).grid;
    std::optional<CellMask> road;
    if (cfg.strategy == Strategy::road) road = predicted_road_mask(agent.layer(Layer::road).grid);
    CellMask response = response_mask(UncertaintyGrid::from_bev(coop_grid), request, cfg.u_coop,
                                      cfg.strategy, road ? &*road : nullptr);
    const auto id = static_cast<std::uint32_t>(agent.agent_index);
    std::vector<std::uint8_t> bytes =
        encode_cpm(make_payload(coop_grid, response, id, cfg.frame_id, layer));
    out.bytes += bytes.size();
    received.push_back(decode_cpm(bytes));
    out.responses.push_back(std::move(response));
    out.agent_ids.push_back(id);
    out.wire.push_back(std::move(bytes));
  }
  out.fused = fuse_all(ego_grid, received);
  return out;
}

CoopOutcome cooperate(const SceneRun& run, Layer layer, double u_ego, const CoopConfig& cfg) {
  const BevGrid& ego_grid = run.ego_run().layer(layer).grid;
  return cooperate(run, layer, request_mask(UncertaintyGrid::from_bev(ego_grid), u_ego), cfg);
}

LayerScores score(const BevGrid& grid, const std::vector<std::uint8_t>& gt, double u_thr) {
  const EvalInputs in = EvalInputs::from_grid(grid, gt, u_thr);
  return {iou(in, IouMode::all), iou(in, IouMode::obs)};
}

std::size_t fusion_violations(const BevGrid& before, const BevGrid& after) {
  if (!(before.grid == after.grid)) throw std::invalid_argument("grid frames do not match");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < before.grid.cell_count(); ++i) {
    const bool received = after.e_fg[i] != before.e_fg[i] || after.e_bg[i] != before.e_bg[i];
    if (received && after.cell(i).u > before.cell(i).u) ++bad;
  }
  return bad;
}

SweepResult sweep(const SceneRun& run, const std::vector<double>& u_egos, const CoopConfig& cfg,
                  double u_thr) {
  if (run.agents.size() < 2) throw std::invalid_argument("sweep needs at least two agents");
  SweepResult result;
  for (const Layer layer : run.cfg.layers) {
    const BevGrid& ego_grid = run.ego_run().layer(layer).grid;
    const auto& gt = run.gt_mask(layer);
    const CoopOutcome base = cooperate(run, layer, CellMask::filled(ego_grid.grid, true), cfg);
    const LayerScores base_scores = score(base.fused, gt, u_thr);
    const LayerScores ego_scores = score(ego_grid, gt, u_thr);
    result.fusion_violations += fusion_violations(ego_grid, base.fused);
    result.baselines.push_back({layer, base.bytes, base_scores.iou_all, base_scores.iou_obs,
                                ego_scores.iou_all, ego_scores.iou_obs});
    for (const double u_ego : u_egos) {
      const CoopOutcome sel = cooperate(run, layer, u_ego, cfg);
      result.fusion_violations += fusion_violations(ego_grid, sel.fused);
      const LayerScores s = score(sel.fused, gt, u_thr);
      result.rows.push_back({u_ego, layer, base.bytes, sel.bytes, s.iou_all, s.iou_obs});
    }
  }
  return result;
}

std::vector<double> parse_u_spec(const std::string& spec) {
  auto parse = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw std::invalid_argument("bad u_ego spec '" + spec + "'");
    return v;
  };
  auto round9 = [](double v) { return std::round(v * 1e9) / 1e9; };
  auto check = [&](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("u_ego values must lie in [0, 1]");
    return v;
  };
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) return {check(parse(spec))};
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw std::invalid_argument("sweep spec must be lo:hi:step");
  const double lo = parse(spec.substr(0, c1));
  const double hi = parse(spec.substr(c1 + 1, c2 - c1 - 1));
  const double step = parse(spec.substr(c2 + 1));
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("sweep spec needs step > 0, hi >= lo");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(check(round9(lo + static_cast<double>(i) * step)));
  return out;
}

std::vector<CalibrationSample> calibration_samples(const BevGrid& grid,
                                                   const std::vector<std::uint8_t>& gt,
                                                   bool entropy) {
  if (gt.size() != grid.grid.cell_count()) {
    throw std::invalid_argument("ground truth does not match the grid frame");
  }
  std::vector<CalibrationSample> out;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!grid.observed[i]) continue;
    const DirichletResult d = grid.cell(i);
    CalibrationSample s;
    s.u = entropy ? entropy_uncertainty({d.p_hat[kFg], d.p_hat[kBg]}) : d.u;
    s.predicted = static_cast<std::uint8_t>(d.p_hat[kFg] > d.p_hat[kBg] ? kFg : kBg);
    s.truth = static_cast<std::uint8_t>(gt[i] ? kFg : kBg);
    out.push_back(s);
  }
  return out;
}

}  // namespace gevbev
