#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gevbev/geometry.hpp"
#include "gevbev/scene.hpp"

namespace gevbev {

/// Each map layer separates foreground from background.
inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::size_t kFg = 0;
inline constexpr std::size_t kBg = 1;

enum class Layer : std::uint8_t { road = 0, object = 1 };

const char* layer_name(Layer layer);
Layer parse_layer(const std::string& name);

/// A map-resident measurement location with per-class evidence and per-class, per-axis
/// variance outputs. Effective variance is o_var + sigma0^2.
struct CenterPoint {
  Vec2 pos;
  std::array<double, kNumClasses> o_cls{};
  std::array<std::array<double, 2>, kNumClasses> o_var{};
};

struct MapParams {
  double nu{2.0};           ///< neighbour radius (m)
  double sigma0_sq{0.01};   ///< variance floor (m^2)
};

/// Query-time spatial Gaussian mixture over centers, indexed by a uniform grid of
/// nu-sized buckets. Immutable after construction.
class EvidentialMap {
 public:
  EvidentialMap(std::vector<CenterPoint> centers, Layer layer, MapParams params = {});

  const std::vector<CenterPoint>& centers() const { return centers_; }
  Layer layer() const { return layer_; }
  const MapParams& params() const { return params_; }
  std::size_t size() const { return centers_.size(); }

  /// Indices of centers strictly closer than nu to `x`, in ascending index order.
  void neighbors(Vec2 x, std::vector<std::size_t>& out) const;
  std::vector<std::size_t> neighbors(Vec2 x) const;

  /// Same centers with replaced outputs. Sizes must match.
  EvidentialMap with_centers(std::vector<CenterPoint> centers) const;

 private:
  void build_index();

  std::vector<CenterPoint> centers_;
  Layer layer_;
  MapParams params_;
  // Bucket grid in CSR form.
  double min_x_{0.0}, min_y_{0.0};
  int nx_{0}, ny_{0};
  std::vector<std::size_t> bucket_start_;
  std::vector<std::size_t> bucket_items_;
};

/// exp(-m/2), m the squared Mahalanobis distance of x to the center under class k's
/// diagonal covariance. This is the density ratio phi(x) / phi(center).
double density_weight(Vec2 x, const CenterPoint& c, std::size_t k, double sigma0_sq);

/// Squared Mahalanobis distance used by density_weight.
double mahalanobis_sq(Vec2 x, const CenterPoint& c, std::size_t k, double sigma0_sq);

struct Evidence {
  std::array<double, kNumClasses> e{};
  bool observed{false};
};

Evidence evidence_at(const EvidentialMap& map, Vec2 x);

struct DirichletResult {
  std::array<double, kNumClasses> alpha{};
  double strength{0.0};
  std::array<double, kNumClasses> p_hat{};
  double u{1.0};
  bool observed{false};
};

DirichletResult dirichlet_from_evidence(const std::array<double, kNumClasses>& e, bool observed);
DirichletResult dirichlet_at(const EvidentialMap& map, Vec2 x);

/// Evidence rasterized at cell centers. p_fg and u are derived on demand so a fused grid
/// stays consistent with its evidence.
struct BevGrid {
  GridSpec grid;
  std::vector<double> e_fg;
  std::vector<double> e_bg;
  std::vector<std::uint8_t> observed;

  explicit BevGrid(const GridSpec& spec = {});
  DirichletResult cell(std::size_t i) const;
  std::vector<double> p_fg() const;
  std::vector<double> uncertainty() const;
};

BevGrid rasterize(const EvidentialMap& map, const GridSpec& grid);

/// Adds synthetic centers on a step-spaced lattice disc of `radius` around every original
/// center. A synthetic center copies its source's o_var and its o_cls scaled by
/// exp(-offset^2 / (2 sigma0^2)); it is dropped if any kept center lies within step/2.
EvidentialMap expand_centers(const EvidentialMap& map, double radius, double step);

struct CenterInit {
  enum class Mode { constant, per_label } mode{Mode::constant};
  std::array<double, kNumClasses> o_cls{1.0, 1.0};
  std::array<double, 2> o_var{0.0, 0.0};
  double label_evidence{1.0};  ///< per_label: evidence placed on the point's class
};

/// Centers at the 0.4 m xy-voxel centroids of the layer's points: the road layer keeps
/// free-space samples, the object layer drops them. Throws if nothing is left.
EvidentialMap build_from_cloud(const PointCloud& cloud, Layer layer, const CenterInit& init,
                               const MapParams& params = {}, double voxel = 0.4);

/// Debug snapshot: x,y,o_fg,o_bg,var_fg_x,var_fg_y,var_bg_x,var_bg_y
void write_map_csv(const EvidentialMap& map, const std::filesystem::path& path);

}  // namespace gevbev
