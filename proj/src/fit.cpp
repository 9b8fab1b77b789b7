#include "gevbev/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <numeric>
#include <random>
#include <stdexcept>

#include "gevbev/augment.hpp"

namespace gevbev {

std::size_t TargetSet::count(std::size_t cls) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(cls)));
}

FitConfig FitConfig::road_defaults() { return FitConfig{}; }

FitConfig FitConfig::object_defaults() {
  FitConfig cfg;
  cfg.n_tgt = 1;
  cfg.voxel = 0.0;
  return cfg;
}

namespace {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len_sq = ab.squared_norm();
  double t = len_sq > 0.0 ? dot(p - a, ab) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double distance_to_box_edges(Vec2 p, const OrientedBox3& box) {
  const Polygon fp = box.footprint();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fp.size(); ++i) {
    best = std::min(best, point_segment_distance(p, fp[i], fp[(i + 1) % fp.size()]));
  }
  return best;
}

/// Seeded uniform choice of `keep` indices out of `pool`, returned in ascending order.
std::vector<std::size_t> subsample(std::vector<std::size_t> pool, std::size_t keep,
                                   std::mt19937_64& rng) {
  if (pool.size() <= keep) return pool;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(keep);
  std::sort(pool.begin(), pool.end());
  return pool;
}

bool is_observed(const EvidentialMap& map, Vec2 p, std::vector<std::size_t>& scratch) {
  map.neighbors(p, scratch);
  return !scratch.empty();
}

}  // namespace

TargetSet sample_targets(const PointCloud& cloud, const EvidentialMap& map,
                         const SceneGeometry& geometry, const FitConfig& cfg,
                         std::uint64_t seed) {
  if (cloud.empty()) throw std::invalid_argument("sample_targets needs a non-empty cloud");
  const Layer layer = map.layer();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shift(0.0, cfg.shift_sigma);

  PointCloud shifted;
  for (const LidarPoint& p : cloud) {
    if (layer == Layer::object && p.is_free_space()) continue;
    for (int k = 0; k < cfg.n_tgt; ++k) {
      const double x = p.x + shift(rng);
      const double y = p.y + shift(rng);
      shifted.push_back(make_point(x, y, 0.0, 0.0, PointLabel::other));
    }
  }
  if (cfg.voxel > 0.0) shifted = voxel_downsample(shifted, cfg.voxel, VoxelMode::xy);

  std::vector<std::size_t> scratch;
  std::vector<Vec2> observed;
  observed.reserve(shifted.size());
  for (const LidarPoint& p : shifted) {
    if (is_observed(map, p.xy(), scratch)) observed.push_back(p.xy());
  }
  if (observed.empty()) throw std::runtime_error("no observed target points survived");

  TargetSet out;
  out.layer = layer;
  auto label_of = [&](Vec2 p) -> std::uint8_t {
    const bool fg = layer == Layer::road ? geometry.on_road(p) : geometry.in_vehicle(p);
    return static_cast<std::uint8_t>(fg ? kFg : kBg);
  };

  if (layer == Layer::road) {
    std::vector<std::size_t> by_class[kNumClasses];
    std::vector<std::uint8_t> labels(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) {
      labels[i] = label_of(observed[i]);
      by_class[labels[i]].push_back(i);
    }
    std::vector<std::size_t> kept;
    for (auto& pool : by_class) {
      const auto chosen = subsample(pool, cfg.n_tgt_cap, rng);
      kept.insert(kept.end(), chosen.begin(), chosen.end());
    }
    std::sort(kept.begin(), kept.end());
    for (std::size_t i : kept) {
      out.points.push_back(observed[i]);
      out.labels.push_back(labels[i]);
    }
  } else {
    std::vector<std::size_t> near, far;
    for (std::size_t i = 0; i < observed.size(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (const OrientedBox3& b : geometry.vehicles) {
        d = std::min(d, distance_to_box_edges(observed[i], b));
      }
      (d < cfg.box_margin ? near : far).push_back(i);
    }
    const std::size_t n_bg = cfg.bg_per_gt * geometry.vehicles.size();
    std::vector<std::size_t> kept = subsample(far, n_bg, rng);
    kept.insert(kept.end(), near.begin(), near.end());
    std::sort(kept.begin(), kept.end());
    for (std::size_t i : kept) {
      out.points.push_back(observed[i]);
      out.labels.push_back(label_of(observed[i]));
    }
  }
  if (out.points.empty()) throw std::runtime_error("no observed target points survived");
  return out;
}

namespace {

/// Neighbour lists of every target, fixed for the whole fit because centers never move.
struct Problem {
  std::vector<std::size_t> start;
  std::vector<std::size_t> center;
  std::vector<double> dx2;
  std::vector<double> dy2;
};

Problem build_problem(const EvidentialMap& map, const TargetSet& targets) {
  Problem pb;
  pb.start.reserve(targets.size() + 1);
  pb.start.push_back(0);
  std::vector<std::size_t> nbrs;
  for (const Vec2& t : targets.points) {
    map.neighbors(t, nbrs);
    for (std::size_t i : nbrs) {
      const Vec2 d = t - map.centers()[i].pos;
      pb.center.push_back(i);
      pb.dx2.push_back(d.x * d.x);
      pb.dy2.push_back(d.y * d.y);
    }
    pb.start.push_back(pb.center.size());
  }
  return pb;
}

struct Params {
  std::vector<double> cls;  // [center][class]
  std::vector<double> var;  // [center][class][axis]
};

Params params_of(const EvidentialMap& map) {
  Params p;
  p.cls.reserve(map.size() * kNumClasses);
  p.var.reserve(map.size() * kNumClasses * 2);
  for (const CenterPoint& c : map.centers()) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      p.cls.push_back(c.o_cls[k]);
      p.var.push_back(c.o_var[k][0]);
      p.var.push_back(c.o_var[k][1]);
    }
  }
  return p;
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

/// Loss over all targets; accumulates gradients w.r.t. the pre-activations when the
/// gradient buffers are non-empty.
LossBreakdown forward_backward(const Problem& pb, const TargetSet& targets, const Params& p,
                               double sigma0_sq, double lambda_t, Reduction reduction,
                               std::vector<double>* g_cls, std::vector<double>* g_var) {
  const bool want_grad = g_cls != nullptr;
  if (want_grad) {
    std::fill(g_cls->begin(), g_cls->end(), 0.0);
    std::fill(g_var->begin(), g_var->end(), 0.0);
  }
  const double scale =
      reduction == Reduction::mean ? 1.0 / static_cast<double>(targets.size()) : 1.0;
  LossBreakdown loss;
  loss.lambda_t = lambda_t;
  std::vector<double> weights;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const std::size_t b = pb.start[j], e = pb.start[j + 1];
    weights.resize((e - b) * kNumClasses);
    std::array<double, kNumClasses> ev{};
    for (std::size_t n = b; n < e; ++n) {
      const std::size_t c = pb.center[n];
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        const double a = relu(p.cls[c * kNumClasses + k]);
        double w = 0.0;
        if (a > 0.0) {
          const double vx = relu(p.var[(c * kNumClasses + k) * 2]) + sigma0_sq;
          const double vy = relu(p.var[(c * kNumClasses + k) * 2 + 1]) + sigma0_sq;
          w = std::exp(-0.5 * (pb.dx2[n] / vx + pb.dy2[n] / vy));
          ev[k] += a * w;
        }
        weights[(n - b) * kNumClasses + k] = w;
      }
    }
    std::array<double, kNumClasses> alpha{};
    std::array<double, kNumClasses> y{};
    for (std::size_t k = 0; k < kNumClasses; ++k) alpha[k] = ev[k] + 1.0;
    y[targets.labels[j]] = 1.0;
    std::array<double, kNumClasses> g_alpha{};
    const RowLoss row =
        edl_row(alpha, y, lambda_t, want_grad ? std::span<double>(g_alpha) : std::span<double>());
    loss.sq_term += row.sq;
    loss.var_term += row.var;
    loss.kl_term += row.kl;
    if (!want_grad) continue;
    for (std::size_t n = b; n < e; ++n) {
      const std::size_t c = pb.center[n];
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        const double w = weights[(n - b) * kNumClasses + k];
        if (w == 0.0) continue;
        const double g = scale * g_alpha[k];
        const std::size_t ck = c * kNumClasses + k;
        // p.cls[ck] > 0 here, otherwise w would be 0.
        (*g_cls)[ck] += g * w;
        const double a = p.cls[ck];
        const double raw_x = p.var[ck * 2], raw_y = p.var[ck * 2 + 1];
        if (raw_x > 0.0) {
          const double vx = raw_x + sigma0_sq;
          (*g_var)[ck * 2] += g * a * w * 0.5 * pb.dx2[n] / (vx * vx);
        }
        if (raw_y > 0.0) {
          const double vy = raw_y + sigma0_sq;
          (*g_var)[ck * 2 + 1] += g * a * w * 0.5 * pb.dy2[n] / (vy * vy);
        }
      }
    }
  }
  loss.sq_term *= scale;
  loss.var_term *= scale;
  loss.kl_term *= scale;
  loss.total = loss.sq_term + loss.var_term + lambda_t * loss.kl_term;
  return loss;
}

EvidentialMap map_with_params(const EvidentialMap& map, const Params& p) {
  std::vector<CenterPoint> centers = map.centers();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      centers[i].o_cls[k] = relu(p.cls[i * kNumClasses + k]);
      centers[i].o_var[k][0] = relu(p.var[(i * kNumClasses + k) * 2]);
      centers[i].o_var[k][1] = relu(p.var[(i * kNumClasses + k) * 2 + 1]);
    }
  }
  return map.with_centers(std::move(centers));
}

void check_finite(const LossBreakdown& loss, int epoch) {
  if (!std::isfinite(loss.total)) {
    throw std::runtime_error("fit diverged: non-finite loss at epoch " + std::to_string(epoch));
  }
}

}  // namespace

LossBreakdown evaluate_loss(const EvidentialMap& map, const TargetSet& targets,
                            const FitConfig& cfg, double epoch) {
  const Problem pb = build_problem(map, targets);
  return forward_backward(pb, targets, params_of(map), map.params().sigma0_sq,
                          annealing_coefficient(epoch, cfg.a_max), cfg.reduction, nullptr,
                          nullptr);
}

MapGradient loss_gradient(const EvidentialMap& map, const TargetSet& targets,
                          const FitConfig& cfg, double epoch) {
  const Problem pb = build_problem(map, targets);
  const Params p = params_of(map);
  MapGradient g;
  g.cls.resize(p.cls.size());
  g.var.resize(p.var.size());
  g.loss = forward_backward(pb, targets, p, map.params().sigma0_sq,
                            annealing_coefficient(epoch, cfg.a_max), cfg.reduction, &g.cls, &g.var);
  return g;
}

FitResult fit_map(const EvidentialMap& map, const TargetSet& targets, const FitConfig& cfg) {
  if (targets.size() == 0) throw std::invalid_argument("fit_map needs targets");
  if (!(cfg.lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (targets.labels.size() != targets.points.size()) {
    throw std::invalid_argument("target labels and points differ in length");
  }
  const Problem pb = build_problem(map, targets);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (pb.start[j] == pb.start[j + 1]) {
      throw std::invalid_argument("fit_map target outside the observed area");
    }
  }
  const double s0 = map.params().sigma0_sq;
  Params p = params_of(map);
  const Params initial_params = p;
  std::vector<double> g_cls(p.cls.size()), g_var(p.var.size());

  FitResult out{map, {}, {}, {}, {}};
  out.curve.reserve(static_cast<std::size_t>(cfg.epochs));
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lambda_t = annealing_coefficient(epoch, cfg.a_max);
    const LossBreakdown loss =
        forward_backward(pb, targets, p, s0, lambda_t, cfg.reduction, &g_cls, &g_var);
    check_finite(loss, epoch);
    out.curve.push_back(loss);
    best = std::min(best, loss.total);
    out.smoothed.push_back(best);
    for (std::size_t i = 0; i < p.cls.size(); ++i) p.cls[i] -= cfg.lr * g_cls[i];
    for (std::size_t i = 0; i < p.var.size(); ++i) p.var[i] -= cfg.lr * g_var[i];
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(p.cls.begin(), p.cls.end(), finite) ||
        !std::all_of(p.var.begin(), p.var.end(), finite)) {
      throw std::runtime_error("fit diverged: non-finite parameters after epoch " +
                               std::to_string(epoch));
    }
  }
  const double final_lambda = annealing_coefficient(cfg.epochs - 1, cfg.a_max);
  out.initial = forward_backward(pb, targets, initial_params, s0, final_lambda, cfg.reduction,
                                 nullptr, nullptr);
  out.final = forward_backward(pb, targets, p, s0, final_lambda, cfg.reduction, nullptr, nullptr);
  check_finite(out.final, cfg.epochs);
  out.map = map_with_params(map, p);
  return out;
}

void write_loss_csv(const std::vector<LossBreakdown>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,total,sq,var,kl,lambda\n";
  out.precision(10);
  for (std::size_t e = 0; e < curve.size(); ++e) {
    const LossBreakdown& l = curve[e];
    out << e << ',' << l.total << ',' << l.sq_term << ',' << l.var_term << ',' << l.kl_term << ','
        << l.lambda_t << '\n';
  }
}

}  // namespace gevbev
