#include "gevbev/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gevbev {

EvalInputs EvalInputs::from_grid(const BevGrid& grid, const std::vector<std::uint8_t>& gt_fg,
                                 double u_thr) {
  if (gt_fg.size() != grid.grid.cell_count()) {
    throw std::invalid_argument("ground truth does not match the grid frame");
  }
  EvalInputs in;
  const std::size_t n = grid.grid.cell_count();
  in.p_fg.resize(n);
  in.p_bg.resize(n);
  in.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DirichletResult d = grid.cell(i);
    in.p_fg[i] = d.p_hat[kFg];
    in.p_bg[i] = d.p_hat[kBg];
    in.u[i] = d.u;
  }
  in.observed = grid.observed;
  in.gt_fg = gt_fg;
  in.u_thr = u_thr;
  return in;
}

double iou(const EvalInputs& in, IouMode mode) {
  const std::size_t n = in.u.size();
  if (in.p_fg.size() != n || in.p_bg.size() != n || in.observed.size() != n ||
      in.gt_fg.size() != n) {
    throw std::invalid_argument("iou inputs do not share one frame");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool in_x = in.u[i] < in.u_thr;
    if (mode == IouMode::obs) in_x = in_x && in.observed[i];
    const bool x_fg = in_x && in.p_fg[i] > in.p_bg[i];
    const bool y_fg = in_x && in.gt_fg[i];
    const bool missed = mode == IouMode::all && in.gt_fg[i] && !in.observed[i];
    if (x_fg && y_fg) ++inter;
    if (x_fg || y_fg || missed) ++uni;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

int calibration_bin(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("uncertainty outside [0, 1]");
  // Compare against exact decimal edges so u = 0.1 lands in [0.1, 0.2).
  for (int b = kCalibrationBins - 1; b > 0; --b) {
    if (u >= b / 10.0) return b;
  }
  return 0;
}

CalibrationCurve calibration(const std::vector<CalibrationSample>& samples,
                             const std::vector<std::size_t>& class_counts) {
  CalibrationCurve curve;
  std::array<double, kCalibrationBins> correct{};
  for (int b = 0; b < kCalibrationBins; ++b) {
    curve[b].lo = b / 10.0;
    curve[b].hi = (b + 1) / 10.0;
  }
  for (const CalibrationSample& s : samples) {
    if (s.truth >= class_counts.size() || class_counts[s.truth] == 0) {
      throw std::invalid_argument("calibration: class count missing for a represented class");
    }
    const double w = 1.0 / static_cast<double>(class_counts[s.truth]);
    const int b = calibration_bin(s.u);
    curve[b].mass += w;
    if (s.predicted == s.truth) correct[b] += w;
  }
  for (int b = 0; b < kCalibrationBins; ++b) {
    if (curve[b].mass > 0.0) curve[b].weighted_acc = correct[b] / curve[b].mass;
  }
  return curve;
}

CalibrationCurve calibration(const std::vector<CalibrationSample>& samples, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (const CalibrationSample& s : samples) {
    if (s.truth >= k) throw std::invalid_argument("calibration: class index out of range");
    ++counts[s.truth];
  }
  return calibration(samples, counts);
}

double calibration_deviation(const CalibrationCurve& curve, std::size_t k) {
  if (k < 2) throw std::invalid_argument("calibration_deviation needs K >= 2");
  double num = 0.0, mass = 0.0;
  for (const CalibrationBin& b : curve) {
    if (!b.weighted_acc) continue;
    const double mid = 0.5 * (b.lo + b.hi);
    const double ideal = 1.0 - mid * (1.0 - 1.0 / static_cast<double>(k));
    num += b.mass * std::abs(*b.weighted_acc - ideal);
    mass += b.mass;
  }
  if (mass <= 0.0) throw std::invalid_argument("calibration curve is empty");
  return num / mass;
}

double entropy_uncertainty(const std::vector<double>& p) {
  if (p.size() < 2) throw std::invalid_argument("entropy needs K >= 2");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

void write_calibration_csv(const CalibrationCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "bin_lo,bin_hi,weighted_acc,mass\n";
  out.precision(10);
  for (const CalibrationBin& b : curve) {
    if (!b.weighted_acc) continue;
    out << b.lo << ',' << b.hi << ',' << *b.weighted_acc << ',' << b.mass << '\n';
  }
}

}  // namespace gevbev
