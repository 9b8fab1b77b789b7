#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gevbev/evmap.hpp"

namespace gevbev {

struct UncertaintyGrid {
  GridSpec grid;
  std::vector<double> u;
  std::vector<std::uint8_t> observed;

  static UncertaintyGrid from_bev(const BevGrid& bev);
};

struct CellMask {
  GridSpec grid;
  std::vector<std::uint8_t> bits;

  static CellMask filled(const GridSpec& grid, bool value);
  std::size_t count() const;
  bool subset_of(const CellMask& other) const;
};

enum class Strategy { all, road };
const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

/// Cells with u > u_ego. Unobserved cells sit at u = 1.
CellMask request_mask(const UncertaintyGrid& ego, double u_ego);

/// request and coop observed with u < u_coop, further limited to road_mask for the road
/// strategy.
CellMask response_mask(const UncertaintyGrid& coop, const CellMask& request, double u_coop,
                       Strategy strategy, const CellMask* road_mask = nullptr);

struct CpmCell {
  std::uint16_t col{0};
  std::uint16_t row{0};
  float e_fg{0.0f};
  float e_bg{0.0f};
  bool operator==(const CpmCell&) const = default;
};

struct CpmPayload {
  std::uint32_t agent_id{0};
  std::uint32_t frame_id{0};
  Layer layer{Layer::road};
  float origin_x{0.0f};
  float origin_y{0.0f};
  float cell_size{0.0f};
  std::uint16_t width{0};
  std::uint16_t height{0};
  std::vector<CpmCell> cells;
  bool operator==(const CpmPayload&) const = default;
};

inline constexpr std::size_t kCpmHeaderBytes = 34;
inline constexpr std::size_t kCpmCellBytes = 12;
inline constexpr std::uint8_t kCpmVersion = 1;

/// Masked cells of `grid` in row-major order.
CpmPayload make_payload(const BevGrid& grid, const CellMask& mask, std::uint32_t agent_id,
                        std::uint32_t frame_id, Layer layer);

std::vector<std::uint8_t> encode_cpm(const CpmPayload& payload);

class CpmDecodeError : public std::runtime_error {
 public:
  enum class Kind {
    bad_magic,
    bad_version,
    bad_layer,
    truncated,
    trailing_bytes,
    out_of_bounds,
    duplicate_cell,
    negative_evidence
  };
  CpmDecodeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

CpmPayload decode_cpm(std::span<const std::uint8_t> bytes);

/// Adds the payload's evidence into `ego` and marks its cells observed.
void fuse_into(BevGrid& ego, const CpmPayload& payload);
BevGrid fuse(const BevGrid& ego, const CpmPayload& payload);

/// Sums all received evidence first, so the result does not depend on payload order for
/// two payloads (IEEE addition commutes).
BevGrid fuse_all(const BevGrid& ego, std::span<const CpmPayload> payloads);

}  // namespace gevbev
