#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gevbev/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian evidential BEV maps with uncertainty-gated sharing"};
  app.require_subcommand(1);

  gevbev::RunConfig cfg;
  std::string strategy = "all";
  std::vector<std::string> layers{"road", "object"};
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run the pipeline on one scenario");
  run->add_option("--scenario", cfg.scenario, "scenario JSON")->required();
  run->add_option("--out", cfg.out, "output directory")->required();
  run->add_option("--u-ego", cfg.u_ego, "request threshold, single value or lo:hi:step")
      ->capture_default_str();
  run->add_option("--u-coop", cfg.u_coop, "response threshold")->capture_default_str();
  run->add_option("--strategy", strategy, "all | road")->capture_default_str();
  run->add_option("--u-thr", cfg.u_thr, "evaluation uncertainty threshold")->capture_default_str();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--layers", layers, "road, object")->delimiter(',')->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.strategy = gevbev::parse_strategy(strategy);
    cfg.layers.clear();
    for (const std::string& l : layers) cfg.layers.push_back(gevbev::parse_layer(l));
    if (seed_opt->count() > 0) cfg.seed = seed;
    const gevbev::RunReport report = gevbev::run(cfg, std::cerr);
    if (report.fusion_violations != 0) {
      std::cerr << "error: fusion raised uncertainty at " << report.fusion_violations
                << " cells\n";
      return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
