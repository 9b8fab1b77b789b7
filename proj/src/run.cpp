#include "gevbev/run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gevbev/pipeline.hpp"
#include "gevbev/render.hpp"
#include "json.hpp"

namespace gevbev {

void RunConfig::validate() const {
  if (scenario.empty()) throw std::invalid_argument("--scenario is required");
  if (out.empty()) throw std::invalid_argument("--out is required");
  if (!(u_coop >= 0.0 && u_coop <= 1.0)) throw std::invalid_argument("u_coop must lie in [0, 1]");
  if (!(u_thr >= 0.0 && u_thr <= 1.0)) throw std::invalid_argument("u_thr must lie in [0, 1]");
  if (layers.empty()) throw std::invalid_argument("at least one layer is required");
  if (strategy == Strategy::road &&
      std::find(layers.begin(), layers.end(), Layer::road) == layers.end()) {
    throw std::invalid_argument("the road strategy needs the road layer");
  }
  parse_u_spec(u_ego);
}

namespace {

std::string format_u(double u) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", u);
  return buf;
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  std::filesystem::path path(const std::string& rel) {
    files_.push_back(rel);
    const std::filesystem::path p = root_ / rel;
    std::filesystem::create_directories(p.parent_path());
    return p;
  }
  void bytes(const std::string& rel, const std::vector<std::uint8_t>& data) {
    write_bytes(path(rel), data);
  }
  std::ofstream csv(const std::string& rel) {
    std::ofstream out(path(rel));
    if (!out) throw std::runtime_error("cannot write " + rel);
    out.precision(10);
    return out;
  }
  std::vector<std::string> sorted() const {
    std::vector<std::string> f = files_;
    std::sort(f.begin(), f.end());
    return f;
  }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

void write_images(OutputDir& dir, const std::string& prefix, const BevGrid& grid) {
  dir.bytes(prefix + "_uncertainty.pgm", render_uncertainty_pgm(grid));
  dir.bytes(prefix + "_confidence.ppm", render_confidence_ppm(grid));
  dir.bytes(prefix + "_observed.pgm", render_observed_pgm(grid));
}

}  // namespace

RunReport run(const RunConfig& config, std::ostream& log) {
  config.validate();
  Scenario scenario = load_scenario(config.scenario);
  if (config.seed) scenario.seed = *config.seed;
  const std::vector<double> u_values = parse_u_spec(config.u_ego);
  const bool sweep_mode = config.u_ego.find(':') != std::string::npos;

  PipelineConfig pcfg = PipelineConfig::defaults();
  pcfg.layers = config.layers;
  log << "running " << scenario.agents.size() << " agents\n";
  const SceneRun scene = run_scene(scenario, pcfg);

  OutputDir dir(config.out);
  CoopConfig ccfg;
  ccfg.u_coop = config.u_coop;
  ccfg.strategy = config.strategy;

  for (const Layer layer : config.layers) {
    const std::string name = layer_name(layer);
    const AgentRun& ego = scene.ego_run();
    write_images(dir, "ego_" + name, ego.layer(layer).grid);
    for (const AgentRun& agent : scene.agents) {
      write_loss_csv(agent.layer(layer).curve,
                     dir.path("loss_" + name + "_agent" + std::to_string(agent.agent_index) + ".csv"));
    }
    const auto samples = calibration_samples(ego.layer(layer).grid, scene.gt_mask(layer), false);
    if (!samples.empty()) {
      write_calibration_csv(calibration(samples, kNumClasses),
                            dir.path("calibration_" + name + ".csv"));
    }
  }

  RunReport report;
  if (scene.agents.size() >= 2) {
    const SweepResult sw = sweep(scene, u_values, ccfg, config.u_thr);
    report.fusion_violations = sw.fusion_violations;
    for (const Layer layer : config.layers) {
      const std::string name = layer_name(layer);
      const BevGrid& ego_grid = scene.ego_run().layer(layer).grid;
      for (const double u : u_values) {
        const CoopOutcome sel = cooperate(scene, layer, u, ccfg);
        for (std::size_t k = 0; k < sel.wire.size(); ++k) {
          dir.bytes("cpm/" + name + "_u" + format_u(u) + "_agent" +
                        std::to_string(sel.agent_ids[k]) + ".bin",
                    sel.wire[k]);
        }
        if (!sweep_mode) write_images(dir, "fused_" + name, sel.fused);
      }
      if (sweep_mode) {
        const CoopOutcome base = cooperate(scene, layer, CellMask::filled(ego_grid.grid, true), ccfg);
        write_images(dir, "fused_" + name, base.fused);
      }
    }
    if (sweep_mode) {
      std::ofstream csv = dir.csv("sweep.csv");
      csv << "u_ego,layer,baseline_bytes,selected_bytes,iou_all,iou_obs\n";
      for (const SweepRow& r : sw.rows) {
        csv << format_u(r.u_ego) << ',' << layer_name(r.layer) << ',' << r.baseline_bytes << ','
            << r.selected_bytes << ',' << r.iou_all << ',' << r.iou_obs << '\n';
      }
      std::ofstream base = dir.csv("baseline.csv");
      base << "layer,baseline_bytes,iou_all,iou_obs,ego_only_iou_all,ego_only_iou_obs\n";
      for (const BaselineRow& b : sw.baselines) {
        base << layer_name(b.layer) << ',' << b.baseline_bytes << ',' << b.iou_all << ','
             << b.iou_obs << ',' << b.ego_only_iou_all << ',' << b.ego_only_iou_obs << '\n';
      }
    } else {
      std::ofstream csv = dir.csv("summary.csv");
      csv << "u_ego,layer,baseline_bytes,selected_bytes,iou_all,iou_obs,ego_only_iou_all,"
             "ego_only_iou_obs\n";
      for (const SweepRow& r : sw.rows) {
        const auto b = std::find_if(sw.baselines.begin(), sw.baselines.end(),
                                    [&](const BaselineRow& x) { return x.layer == r.layer; });
        csv << format_u(r.u_ego) << ',' << layer_name(r.layer) << ',' << r.baseline_bytes << ','
            << r.selected_bytes << ',' << r.iou_all << ',' << r.iou_obs << ','
            << b->ego_only_iou_all << ',' << b->ego_only_iou_obs << '\n';
      }
    }
  } else {
    log << "single agent: no cooperation outputs\n";
  }

  report.outputs = dir.sorted();
  nlohmann::ordered_json manifest;
  manifest["config"] = {
      {"scenario", config.scenario.filename().string()},
      {"u_ego", config.u_ego},
      {"u_coop", config.u_coop},
      {"strategy", strategy_name(config.strategy)},
      {"u_thr", config.u_thr},
      {"seed", scenario.seed},
      {"layers", [&] {
         std::vector<std::string> names;
         for (Layer l : config.layers) names.emplace_back(layer_name(l));
         return names;
       }()},
      {"grid", {{"origin_x", pcfg.grid.origin_x}, {"origin_y", pcfg.grid.origin_y},
                {"resolution", pcfg.grid.resolution}, {"width", pcfg.grid.width},
                {"height", pcfg.grid.height}}},
      {"nu", pcfg.map_params.nu},
      {"sigma0_sq", pcfg.map_params.sigma0_sq},
      {"free_space", {{"h_fs", pcfg.free_space.h_fs}, {"d_fs", pcfg.free_space.d_fs},
                      {"s_fs", pcfg.free_space.s_fs}, {"v_fs", pcfg.free_space.v_fs}}},
      {"fit", {{"road_epochs", pcfg.road_fit.epochs}, {"road_lr", pcfg.road_fit.lr},
               {"object_epochs", pcfg.object_fit.epochs}, {"object_lr", pcfg.object_fit.lr},
               {"a_max", pcfg.road_fit.a_max}}}};
  manifest["outputs"] = report.outputs;
  std::ofstream mf(dir.root() / "manifest.json");
  if (!mf) throw std::runtime_error("cannot write manifest.json");
  mf << manifest.dump(2) << '\n';
  log << "wrote " << report.outputs.size() << " files to " << config.out.string() << '\n';
  return report;
}

}  // namespace gevbev
