#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gevbev/evmap.hpp"

namespace gevbev {

/// Per-cell predictions and ground truth on one shared frame.
struct EvalInputs {
  std::vector<double> p_fg;
  std::vector<double> p_bg;
  std::vector<double> u;
  std::vector<std::uint8_t> observed;
  std::vector<std::uint8_t> gt_fg;
  double u_thr{1.0};

  static EvalInputs from_grid(const BevGrid& grid, const std::vector<std::uint8_t>& gt_fg,
                              double u_thr);
};

enum class IouMode { all, obs };

/// X = {u < u_thr} (and observed in obs mode), X^fg = {x in X : p_fg > p_bg},
/// Y^fg = gt-fg within X. In all mode unobserved gt-fg cells join the union.
/// 1 when the union is empty.
double iou(const EvalInputs& in, IouMode mode);

struct CalibrationSample {
  double u{1.0};
  std::uint8_t predicted{0};
  std::uint8_t truth{0};
};

inline constexpr int kCalibrationBins = 10;

struct CalibrationBin {
  double lo{0.0}, hi{0.0};
  std::optional<double> weighted_acc;  ///< absent for empty bins
  double mass{0.0};
};

using CalibrationCurve = std::array<CalibrationBin, kCalibrationBins>;

/// Bin of u: [k/10, (k+1)/10), the last bin closed at 1.
int calibration_bin(double u);

/// Each sample weighs 1 / class_counts[truth].
CalibrationCurve calibration(const std::vector<CalibrationSample>& samples,
                             const std::vector<std::size_t>& class_counts);

/// Class counts taken from the samples themselves.
CalibrationCurve calibration(const std::vector<CalibrationSample>& samples, std::size_t k);

/// Mass-weighted mean |acc - (1 - u_mid (1 - 1/K))| over non-empty bins.
double calibration_deviation(const CalibrationCurve& curve, std::size_t k);

/// Normalized entropy -sum p ln p / ln K.
double entropy_uncertainty(const std::vector<double>& p);

/// bin_lo,bin_hi,weighted_acc,mass with empty bins left out.
void write_calibration_csv(const CalibrationCurve& curve, const std::filesystem::path& path);

}  // namespace gevbev
