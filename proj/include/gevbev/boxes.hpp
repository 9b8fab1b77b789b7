#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gevbev/evmap.hpp"
#include "gevbev/geometry.hpp"

namespace gevbev {

struct BoxEncoding {
  std::array<double, 3> loc{};  ///< (dx, dy) / d_xy, dz / h_a
  std::array<double, 3> dim{};  ///< log(l/l_a), log(w/w_a), log(h/h_a)
  std::array<double, 4> dir{};  ///< offsets of (cos, sin) against the anchor and its reverse
};

inline constexpr double kAnchorLength = 4.41;
inline constexpr double kAnchorWidth = 1.98;
inline constexpr double kAnchorHeight = 1.64;

/// Two anchors (yaw 0 and pi/2) per location.
std::vector<OrientedBox3> make_anchors(const std::vector<Vec2>& locations, double z);

BoxEncoding encode_box(const OrientedBox3& gt, const OrientedBox3& anchor);

/// Inverse of encode_box. The direction comes from whichever (cos, sin) offset pair has the
/// smaller norm.
OrientedBox3 decode_box(const BoxEncoding& enc, const OrientedBox3& anchor);

/// Footprint intersection over union.
double rotated_iou_bev(const OrientedBox3& a, const OrientedBox3& b);

enum class AnchorLabel : std::int8_t { negative = 0, positive = 1, ignore = -1 };

struct AnchorMatch {
  std::vector<AnchorLabel> labels;
  std::vector<int> matched_gt;   ///< best gt per anchor, -1 without gts
  std::vector<double> best_iou;
  std::vector<std::size_t> sampled_negatives;  ///< ascending
};

struct MatchConfig {
  double pos_iou{0.4};
  double neg_iou{0.2};
  std::size_t max_negatives{512};
};

AnchorMatch match_anchors(const std::vector<OrientedBox3>& anchors,
                          const std::vector<OrientedBox3>& gts, std::uint64_t seed,
                          const MatchConfig& cfg = {});

/// Greedy NMS by descending score, ties to the lower index. Returns kept indices in
/// selection order.
std::vector<std::size_t> nms(const std::vector<OrientedBox3>& boxes,
                             const std::vector<double>& scores, double iou_thr);

/// Foreground-evidence mass IoU of two box regions over the rasterized object map.
double jiou(const OrientedBox3& det, const OrientedBox3& gt, const EvidentialMap& object_map,
            const GridSpec& grid);
double jiou(const OrientedBox3& det, const OrientedBox3& gt, const BevGrid& object_grid);

}  // namespace gevbev
