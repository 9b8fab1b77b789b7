#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gevbev/coop.hpp"
#include "gevbev/evmap.hpp"

namespace gevbev {

struct RunConfig {
  std::filesystem::path scenario;
  std::filesystem::path out;
  std::string u_ego{"0.5"};  ///< single value or lo:hi:step
  double u_coop{1.0};
  Strategy strategy{Strategy::all};
  double u_thr{1.0};
  std::optional<std::uint64_t> seed;  ///< replaces the scenario seed
  std::vector<Layer> layers{Layer::road, Layer::object};

  void validate() const;
};

struct RunReport {
  std::vector<std::string> outputs;  ///< paths relative to out, sorted
  std::size_t fusion_violations{0};
};

/// Runs the whole pipeline and writes maps, tables, CPM payloads and manifest.json into
/// config.out. Throws on invalid input or a diverging fit.
RunReport run(const RunConfig& config, std::ostream& log);

}  // namespace gevbev
