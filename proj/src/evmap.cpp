#include "gevbev/evmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "gevbev/augment.hpp"
#include "gevbev/parallel.hpp"

namespace gevbev {

const char* layer_name(Layer layer) { return layer == Layer::road ? "road" : "object"; }

Layer parse_layer(const std::string& name) {
  if (name == "road") return Layer::road;
  if (name == "object") return Layer::object;
  throw std::invalid_argument("unknown layer '" + name + "' (expected road or object)");
}

EvidentialMap::EvidentialMap(std::vector<CenterPoint> centers, Layer layer, MapParams params)
    : centers_(std::move(centers)), layer_(layer), params_(params) {
  if (!(params_.nu > 0.0)) throw std::invalid_argument("nu must be > 0");
  if (!(params_.sigma0_sq > 0.0)) throw std::invalid_argument("sigma0^2 must be > 0");
  for (const CenterPoint& c : centers_) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      if (!(c.o_cls[k] >= 0.0) || !(c.o_var[k][0] >= 0.0) || !(c.o_var[k][1] >= 0.0)) {
        throw std::invalid_argument("center outputs must be non-negative");
      }
    }
  }
  build_index();
}

void EvidentialMap::build_index() {
  bucket_start_.clear();
  bucket_items_.clear();
  if (centers_.empty()) {
    nx_ = ny_ = 0;
    return;
  }
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = max_x;
  min_x_ = min_y_ = std::numeric_limits<double>::infinity();
  for (const CenterPoint& c : centers_) {
    min_x_ = std::min(min_x_, c.pos.x);
    min_y_ = std::min(min_y_, c.pos.y);
    max_x = std::max(max_x, c.pos.x);
    max_y = std::max(max_y, c.pos.y);
  }
  const double cell = params_.nu;
  nx_ = static_cast<int>(std::floor((max_x - min_x_) / cell)) + 1;
  ny_ = static_cast<int>(std::floor((max_y - min_y_) / cell)) + 1;
  const std::size_t n_buckets = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  std::vector<std::size_t> bucket_of(centers_.size());
  bucket_start_.assign(n_buckets + 1, 0);
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    const int bx = std::min(nx_ - 1, static_cast<int>((centers_[i].pos.x - min_x_) / cell));
    const int by = std::min(ny_ - 1, static_cast<int>((centers_[i].pos.y - min_y_) / cell));
    bucket_of[i] = static_cast<std::size_t>(by) * static_cast<std::size_t>(nx_) +
                   static_cast<std::size_t>(bx);
    ++bucket_start_[bucket_of[i] + 1];
  }
  for (std::size_t b = 0; b < n_buckets; ++b) bucket_start_[b + 1] += bucket_start_[b];
  bucket_items_.resize(centers_.size());
  std::vector<std::size_t> fill(bucket_start_.begin(), bucket_start_.end() - 1);
  for (std::size_t i = 0; i < centers_.size(); ++i) bucket_items_[fill[bucket_of[i]]++] = i;
}

void EvidentialMap::neighbors(Vec2 x, std::vector<std::size_t>& out) const {
  out.clear();
  if (centers_.empty()) return;
  const double cell = params_.nu;
  const double nu_sq = params_.nu * params_.nu;
  const auto bx = static_cast<long>(std::floor((x.x - min_x_) / cell));
  const auto by = static_cast<long>(std::floor((x.y - min_y_) / cell));
  for (long yy = std::max(0L, by - 1); yy <= std::min<long>(ny_ - 1, by + 1); ++yy) {
    for (long xx = std::max(0L, bx - 1); xx <= std::min<long>(nx_ - 1, bx + 1); ++xx) {
      const std::size_t b = static_cast<std::size_t>(yy) * static_cast<std::size_t>(nx_) +
                            static_cast<std::size_t>(xx);
      for (std::size_t s = bucket_start_[b]; s < bucket_start_[b + 1]; ++s) {
        const std::size_t i = bucket_items_[s];
        if ((centers_[i].pos - x).squared_norm() < nu_sq) out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> EvidentialMap::neighbors(Vec2 x) const {
  std::vector<std::size_t> out;
  neighbors(x, out);
  return out;
}

EvidentialMap EvidentialMap::with_centers(std::vector<CenterPoint> centers) const {
  if (centers.size() != centers_.size()) {
    throw std::invalid_argument("with_centers must keep the center count");
  }
  return EvidentialMap(std::move(centers), layer_, params_);
}

double mahalanobis_sq(Vec2 x, const CenterPoint& c, std::size_t k, double sigma0_sq) {
  const double dx = x.x - c.pos.x;
  const double dy = x.y - c.pos.y;
  return dx * dx / (c.o_var[k][0] + sigma0_sq) + dy * dy / (c.o_var[k][1] + sigma0_sq);
}

double density_weight(Vec2 x, const CenterPoint& c, std::size_t k, double sigma0_sq) {
  return std::exp(-0.5 * mahalanobis_sq(x, c, k, sigma0_sq));
}

namespace {

Evidence evidence_from(const EvidentialMap& map, Vec2 x, std::vector<std::size_t>& scratch) {
  map.neighbors(x, scratch);
  Evidence ev;
  ev.observed = !scratch.empty();
  const double s0 = map.params().sigma0_sq;
  for (std::size_t i : scratch) {
    const CenterPoint& c = map.centers()[i];
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      if (c.o_cls[k] > 0.0) ev.e[k] += density_weight(x, c, k, s0) * c.o_cls[k];
    }
  }
  return ev;
}

}  // namespace

Evidence evidence_at(const EvidentialMap& map, Vec2 x) {
  std::vector<std::size_t> scratch;
  return evidence_from(map, x, scratch);
}

DirichletResult dirichlet_from_evidence(const std::array<double, kNumClasses>& e,
                                        bool observed) {
  DirichletResult r;
  r.observed = observed;
  r.strength = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    r.alpha[k] = e[k] + 1.0;
    r.strength += r.alpha[k];
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) r.p_hat[k] = r.alpha[k] / r.strength;
  r.u = static_cast<double>(kNumClasses) / r.strength;
  return r;
}

DirichletResult dirichlet_at(const EvidentialMap& map, Vec2 x) {
  const Evidence ev = evidence_at(map, x);
  return dirichlet_from_evidence(ev.e, ev.observed);
}

BevGrid::BevGrid(const GridSpec& spec)
    : grid(spec),
      e_fg(spec.cell_count(), 0.0),
      e_bg(spec.cell_count(), 0.0),
      observed(spec.cell_count(), 0) {}

DirichletResult BevGrid::cell(std::size_t i) const {
  return dirichlet_from_evidence({e_fg[i], e_bg[i]}, observed[i] != 0);
}

std::vector<double> BevGrid::p_fg() const {
  std::vector<double> out(grid.cell_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cell(i).p_hat[kFg];
  return out;
}

std::vector<double> BevGrid::uncertainty() const {
  std::vector<double> out(grid.cell_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cell(i).u;
  return out;
}

BevGrid rasterize(const EvidentialMap& map, const GridSpec& grid) {
  if (!(grid.resolution > 0.0)) throw std::invalid_argument("grid resolution must be > 0");
  BevGrid out(grid);
  parallel_for(static_cast<std::size_t>(grid.height), [&](std::size_t row) {
    std::vector<std::size_t> scratch;
    for (int col = 0; col < grid.width; ++col) {
      const std::size_t i = grid.index(col, static_cast<int>(row));
      const Evidence ev = evidence_from(map, grid.cell_center(col, static_cast<int>(row)), scratch);
      out.e_fg[i] = ev.e[kFg];
      out.e_bg[i] = ev.e[kBg];
      out.observed[i] = ev.observed ? 1 : 0;
    }
  });
  return out;
}

EvidentialMap expand_centers(const EvidentialMap& map, double radius, double step) {
  if (!(radius >= 0.0)) throw std::invalid_argument("expansion radius must be >= 0");
  if (!(step > 0.0)) throw std::invalid_argument("expansion step must be > 0");
  if (radius == 0.0 || map.size() == 0) return map;

  std::vector<Vec2> offsets;
  const int reach = static_cast<int>(std::floor(radius / step + 1e-9));
  const double r_sq = radius * radius * (1.0 + 1e-12);
  for (int j = -reach; j <= reach; ++j) {
    for (int i = -reach; i <= reach; ++i) {
      if (i == 0 && j == 0) continue;
      const Vec2 o{i * step, j * step};
      if (o.squared_norm() <= r_sq) offsets.push_back(o);
    }
  }

  const double min_sep = 0.5 * step;
  const double min_sep_sq = min_sep * min_sep;
  auto key_of = [&](Vec2 p) {
    const auto kx = static_cast<std::int64_t>(std::floor(p.x / min_sep));
    const auto ky = static_cast<std::int64_t>(std::floor(p.y / min_sep));
    return std::pair{kx, ky};
  };
  auto pack = [](std::int64_t kx, std::int64_t ky) {
    return (static_cast<std::uint64_t>(kx) << 32) ^ (static_cast<std::uint64_t>(ky) & 0xffffffffULL);
  };
  std::vector<CenterPoint> centers = map.centers();
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  auto insert = [&](std::size_t idx) {
    const auto [kx, ky] = key_of(centers[idx].pos);
    buckets[pack(kx, ky)].push_back(idx);
  };
  auto occupied = [&](Vec2 p) {
    const auto [kx, ky] = key_of(p);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = buckets.find(pack(kx + dx, ky + dy));
        if (it == buckets.end()) continue;
        for (std::size_t idx : it->second) {
          if ((centers[idx].pos - p).squared_norm() < min_sep_sq) return true;
        }
      }
    }
    return false;
  };
  const std::size_t n_orig = centers.size();
  for (std::size_t i = 0; i < n_orig; ++i) insert(i);
  const double s0 = map.params().sigma0_sq;
  for (std::size_t i = 0; i < n_orig; ++i) {
    for (const Vec2& o : offsets) {
      const Vec2 p = centers[i].pos + o;
      if (occupied(p)) continue;
      CenterPoint c = centers[i];
      c.pos = p;
      const double decay = std::exp(-o.squared_norm() / (2.0 * s0));
      for (double& v : c.o_cls) v *= decay;
      centers.push_back(c);
      insert(centers.size() - 1);
    }
  }
  return EvidentialMap(std::move(centers), map.layer(), map.params());
}

EvidentialMap build_from_cloud(const PointCloud& cloud, Layer layer, const CenterInit& init,
                               const MapParams& params, double voxel) {
  if (cloud.empty()) throw std::invalid_argument("build_from_cloud needs a non-empty cloud");
  PointCloud kept;
  kept.reserve(cloud.size());
  for (const LidarPoint& p : cloud) {
    if (layer == Layer::object && p.is_free_space()) continue;
    kept.push_back(p);
  }
  const PointCloud voxels = voxel_downsample(kept, voxel, VoxelMode::xy);
  if (voxels.empty()) throw std::runtime_error("no observable centers");
  std::vector<CenterPoint> centers;
  centers.reserve(voxels.size());
  for (const LidarPoint& p : voxels) {
    CenterPoint c;
    c.pos = p.xy();
    if (init.mode == CenterInit::Mode::constant) {
      c.o_cls = init.o_cls;
    } else {
      const bool fg = layer == Layer::road ? p.label == PointLabel::road
                                           : p.label == PointLabel::vehicle;
      c.o_cls = {0.0, 0.0};
      c.o_cls[fg ? kFg : kBg] = init.label_evidence;
    }
    c.o_var = {init.o_var, init.o_var};
    centers.push_back(c);
  }
  return EvidentialMap(std::move(centers), layer, params);
}

void write_map_csv(const EvidentialMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,y,o_fg,o_bg,var_fg_x,var_fg_y,var_bg_x,var_bg_y\n";
  out.precision(17);
  for (const CenterPoint& c : map.centers()) {
    out << c.pos.x << ',' << c.pos.y << ',' << c.o_cls[kFg] << ',' << c.o_cls[kBg] << ','
        << c.o_var[kFg][0] << ',' << c.o_var[kFg][1] << ',' << c.o_var[kBg][0] << ','
        << c.o_var[kBg][1] << '\n';
  }
}

}  // namespace gevbev
