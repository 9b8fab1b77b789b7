#include <algorithm>
#include <numbers>

#include "doctest.h"
#include "gevbev/pipeline.hpp"

using namespace gevbev;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.seed = 21;
  s.roads.push_back({{-30, -4}, {30, -4}, {30, 4}, {-30, 4}});
  s.vehicles.push_back({-12.0, -2.0, 0.8, 4.4, 1.9, 1.6, 0.0});
  s.vehicles.push_back({-6.0, -2.0, 1.6, 8.0, 2.5, 3.2, 0.0});  // occluder
  s.vehicles.push_back({8.0, 2.0, 0.8, 4.4, 1.9, 1.6, std::numbers::pi});
  s.vehicles.push_back({2.0, -2.0, 0.8, 4.4, 1.9, 1.6, 0.0});
  AgentSpec ego;
  ego.is_ego = true;
  ego.pose = {-12.0, -2.0, 0.0};
  AgentSpec coop;
  coop.pose = {8.0, 2.0, std::numbers::pi};
  for (AgentSpec* a : {&ego, &coop}) {
    a->lidar.n_rays = 240;
    a->lidar.max_range = 25.0;
    a->lidar.ring_radii = default_ring_radii(25.0);
  }
  s.agents = {ego, coop};
  validate(s);
  return s;
}

PipelineConfig small_config() {
  PipelineConfig cfg = PipelineConfig::defaults();
  cfg.grid = GridSpec::centered(20.0, 0.5);
  cfg.road_fit.epochs = 30;
  cfg.object_fit.epochs = 30;
  cfg.road_fit.n_tgt_cap = 400;
  return cfg;
}

const SceneRun& shared_run() {
  static const SceneRun run = run_scene(small_scenario(), small_config());
  return run;
}

}  // namespace

TEST_CASE("u specs") {
  const auto v = parse_u_spec("0:1:0.1");
  REQUIRE(v.size() == 11u);
  CHECK(v[3] == 0.3);
  CHECK(v.back() == 1.0);
  CHECK(parse_u_spec("0.25") == std::vector<double>{0.25});
  CHECK(parse_u_spec("0.2:0.5:0.15") == std::vector<double>{0.2, 0.35, 0.5});
  for (const char* bad : {"", "x", "1.5", "-0.1", "0:1", "0:1:0", "0:1:-0.1", "0.8:0.2:0.1",
                          "0:2:0.5", "0:1:0.1:3"}) {
    CHECK_THROWS_AS(parse_u_spec(bad), std::invalid_argument);
  }
}

TEST_CASE("scene run shape") {
  const SceneRun& run = shared_run();
  REQUIRE(run.agents.size() == 2u);
  CHECK(run.ego == 0u);
  for (const AgentRun& a : run.agents) {
    REQUIRE(a.layers.size() == 2u);
    for (const LayerResult& l : a.layers) {
      CHECK(l.grid.grid == run.cfg.grid);
      CHECK(l.final.total <= l.initial.total);
      CHECK(l.curve.size() == 30u);
    }
  }
  CHECK(run.gt_mask(Layer::road).size() == run.cfg.grid.cell_count());
  CHECK(run.ego_run().pose_in_ego.x == doctest::Approx(0.0));
  CHECK(run.agents[1].pose_in_ego.x == doctest::Approx(20.0));
  CHECK(run.agents[1].pose_in_ego.y == doctest::Approx(4.0));

  const BevGrid& road = run.ego_run().layer(Layer::road).grid;
  const auto samples = calibration_samples(road, run.gt_mask(Layer::road), false);
  CHECK(samples.size() ==
        static_cast<std::size_t>(std::count(road.observed.begin(), road.observed.end(), 1)));
  for (const CalibrationSample& s : calibration_samples(road, run.gt_mask(Layer::road), true)) {
    CHECK(s.u >= 0.0);
    CHECK(s.u <= 1.0);
  }
}

TEST_CASE("cooperation endpoints and monotone bytes") {
  const SceneRun& run = shared_run();
  for (const Strategy strat : {Strategy::all, Strategy::road}) {
    CoopConfig cc;
    cc.strategy = strat;
    const SweepResult r = sweep(run, parse_u_spec("0:1:0.25"), cc, 1.0);
    CHECK(r.fusion_violations == 0u);
    for (const Layer layer : {Layer::road, Layer::object}) {
      std::vector<SweepRow> rows;
      for (const SweepRow& row : r.rows) {
        if (row.layer == layer) rows.push_back(row);
      }
      REQUIRE(rows.size() == 5u);
      const auto base = std::find_if(r.baselines.begin(), r.baselines.end(),
                                     [&](const BaselineRow& b) { return b.layer == layer; });
      REQUIRE(base != r.baselines.end());
      CHECK(rows.front().selected_bytes == base->baseline_bytes);
      CHECK(rows.front().iou_obs == doctest::Approx(base->iou_obs));
      CHECK(rows.back().selected_bytes == kCpmHeaderBytes);
      CHECK(rows.back().iou_obs == doctest::Approx(base->ego_only_iou_obs));
      CHECK(rows.back().iou_all == doctest::Approx(base->ego_only_iou_all));
      for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].selected_bytes <= rows[i - 1].selected_bytes);
        CHECK(rows[i].baseline_bytes == base->baseline_bytes);
      }
    }
  }
}

TEST_CASE("road strategy stays on the coop's predicted road") {
  const SceneRun& run = shared_run();
  CoopConfig cc;
  cc.strategy = Strategy::road;
  const CoopOutcome out = cooperate(run, Layer::object, 0.0, cc);
  REQUIRE(out.responses.size() == 1u);
  CHECK(out.agent_ids == std::vector<std::uint32_t>{1});
  const CellMask road = predicted_road_mask(run.agents[1].layer(Layer::road).grid);
  CHECK(out.responses[0].subset_of(road));
  CHECK(out.responses[0].subset_of(out.request));
  CHECK(out.bytes == out.wire[0].size());
  CHECK(out.bytes == kCpmHeaderBytes + kCpmCellBytes * out.responses[0].count());
  CHECK(decode_cpm(out.wire[0]).cells.size() == out.responses[0].count());
  CHECK(fusion_violations(run.ego_run().layer(Layer::object).grid, out.fused) == 0u);
}

TEST_CASE("scene run does not depend on the worker count") {
  PipelineConfig cfg = small_config();
  cfg.road_fit.epochs = 5;
  cfg.object_fit.epochs = 5;
  cfg.layers = {Layer::object};
  setenv("GEVBEV_THREADS", "1", 1);
  const SceneRun a = run_scene(small_scenario(), cfg);
  setenv("GEVBEV_THREADS", "3", 1);
  const SceneRun b = run_scene(small_scenario(), cfg);
  unsetenv("GEVBEV_THREADS");
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    CHECK(a.agents[i].layer(Layer::object).grid.e_fg == b.agents[i].layer(Layer::object).grid.e_fg);
  }
}
