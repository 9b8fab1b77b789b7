#include "gevbev/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gevbev {

std::vector<OrientedBox3> make_anchors(const std::vector<Vec2>& locations, double z) {
  std::vector<OrientedBox3> out;
  out.reserve(2 * locations.size());
  for (const Vec2& p : locations) {
    for (double yaw : {0.0, std::numbers::pi / 2.0}) {
      out.push_back({p.x, p.y, z, kAnchorLength, kAnchorWidth, kAnchorHeight, yaw});
    }
  }
  return out;
}

namespace {

void require_positive_dims(const OrientedBox3& b, const char* what) {
  if (!(b.l > 0.0 && b.w > 0.0 && b.h > 0.0)) {
    throw std::invalid_argument(std::string(what) + " dimensions must be positive");
  }
}

}  // namespace

BoxEncoding encode_box(const OrientedBox3& gt, const OrientedBox3& anchor) {
  require_positive_dims(anchor, "anchor");
  require_positive_dims(gt, "box");
  const double d_xy = std::hypot(anchor.l, anchor.w);
  BoxEncoding enc;
  enc.loc = {(gt.x - anchor.x) / d_xy, (gt.y - anchor.y) / d_xy, (gt.z - anchor.z) / anchor.h};
  enc.dim = {std::log(gt.l / anchor.l), std::log(gt.w / anchor.w), std::log(gt.h / anchor.h)};
  const double cg = std::cos(gt.yaw), sg = std::sin(gt.yaw);
  const double ca = std::cos(anchor.yaw), sa = std::sin(anchor.yaw);
  enc.dir = {cg - ca, sg - sa, cg + ca, sg + sa};
  return enc;
}

OrientedBox3 decode_box(const BoxEncoding& enc, const OrientedBox3& anchor) {
  require_positive_dims(anchor, "anchor");
  const double d_xy = std::hypot(anchor.l, anchor.w);
  OrientedBox3 b;
  b.x = anchor.x + enc.loc[0] * d_xy;
  b.y = anchor.y + enc.loc[1] * d_xy;
  b.z = anchor.z + enc.loc[2] * anchor.h;
  b.l = anchor.l * std::exp(enc.dim[0]);
  b.w = anchor.w * std::exp(enc.dim[1]);
  b.h = anchor.h * std::exp(enc.dim[2]);
  const double ca = std::cos(anchor.yaw), sa = std::sin(anchor.yaw);
  const double forward = std::hypot(enc.dir[0], enc.dir[1]);
  const double reverse = std::hypot(enc.dir[2], enc.dir[3]);
  double c, s;
  if (forward <= reverse) {
    c = ca + enc.dir[0];
    s = sa + enc.dir[1];
  } else {
    // Offsets against the reversed anchor heading (cos, sin) = (-ca, -sa).
    c = enc.dir[2] - ca;
    s = enc.dir[3] - sa;
  }
  b.yaw = std::atan2(s, c);
  return b;
}

double rotated_iou_bev(const OrientedBox3& a, const OrientedBox3& b) {
  const Polygon inter = clip_convex(a.footprint(), b.footprint());
  const double area_i = inter.size() >= 3 ? std::abs(signed_area(inter)) : 0.0;
  const double area_u = a.footprint_area() + b.footprint_area() - area_i;
  if (area_u <= 0.0) return 0.0;
  return std::clamp(area_i / area_u, 0.0, 1.0);
}

AnchorMatch match_anchors(const std::vector<OrientedBox3>& anchors,
                          const std::vector<OrientedBox3>& gts, std::uint64_t seed,
                          const MatchConfig& cfg) {
  AnchorMatch m;
  m.labels.assign(anchors.size(), AnchorLabel::negative);
  m.matched_gt.assign(anchors.size(), -1);
  m.best_iou.assign(anchors.size(), 0.0);
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = rotated_iou_bev(anchors[i], gts[g]);
      if (iou > m.best_iou[i]) {
        m.best_iou[i] = iou;
        m.matched_gt[i] = static_cast<int>(g);
      }
    }
    if (m.best_iou[i] >= cfg.pos_iou) {
      m.labels[i] = AnchorLabel::positive;
    } else if (m.best_iou[i] <= cfg.neg_iou) {
      negatives.push_back(i);
    } else {
      m.labels[i] = AnchorLabel::ignore;
    }
  }
  if (negatives.size() > cfg.max_negatives) {
    std::mt19937_64 rng(seed);
    std::shuffle(negatives.begin(), negatives.end(), rng);
    negatives.resize(cfg.max_negatives);
    std::sort(negatives.begin(), negatives.end());
  }
  m.sampled_negatives = std::move(negatives);
  return m;
}

std::vector<std::size_t> nms(const std::vector<OrientedBox3>& boxes,
                             const std::vector<double>& scores, double iou_thr) {
  if (boxes.size() != scores.size()) {
    throw std::invalid_argument("nms: boxes and scores differ in length");
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> kept;
  std::vector<bool> suppressed(boxes.size(), false);
  for (std::size_t i : order) {
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (std::size_t j : order) {
      if (!suppressed[j] && j != i && rotated_iou_bev(boxes[i], boxes[j]) > iou_thr) {
        suppressed[j] = true;
      }
    }
  }
  return kept;
}

double jiou(const OrientedBox3& det, const OrientedBox3& gt, const BevGrid& object_grid) {
  double m_inter = 0.0, m_union = 0.0;
  for (std::size_t i = 0; i < object_grid.grid.cell_count(); ++i) {
    const double e = object_grid.e_fg[i];
    if (e == 0.0) continue;
    const Vec2 c = object_grid.grid.cell_center(i);
    const bool in_det = det.contains_xy(c);
    const bool in_gt = gt.contains_xy(c);
    if (in_det && in_gt) m_inter += e;
    if (in_det || in_gt) m_union += e;
  }
  return m_union > 0.0 ? m_inter / m_union : 0.0;
}

double jiou(const OrientedBox3& det, const OrientedBox3& gt, const EvidentialMap& object_map,
            const GridSpec& grid) {
  if (!(grid.resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
  return jiou(det, gt, rasterize(object_map, grid));
}

}  // namespace gevbev
