#include "gevbev/coop.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace gevbev {

namespace {

void require_same_frame(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw std::invalid_argument("grid frames do not match");
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw CpmDecodeError(CpmDecodeError::Kind::truncated, "CPM payload truncated");
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_{0};
};

}  // namespace

UncertaintyGrid UncertaintyGrid::from_bev(const BevGrid& bev) {
  return {bev.grid, bev.uncertainty(), bev.observed};
}

CellMask CellMask::filled(const GridSpec& grid, bool value) {
  return {grid, std::vector<std::uint8_t>(grid.cell_count(), value ? 1 : 0)};
}

std::size_t CellMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

bool CellMask::subset_of(const CellMask& other) const {
  require_same_frame(grid, other.grid);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] && !other.bits[i]) return false;
  }
  return true;
}

const char* strategy_name(Strategy s) { return s == Strategy::road ? "road" : "all"; }

Strategy parse_strategy(const std::string& name) {
  if (name == "all") return Strategy::all;
  if (name == "road") return Strategy::road;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

CellMask request_mask(const UncertaintyGrid& ego, double u_ego) {
  if (!(u_ego >= 0.0 && u_ego <= 1.0)) throw std::invalid_argument("u_ego outside [0, 1]");
  CellMask m = CellMask::filled(ego.grid, false);
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    const double u = ego.observed[i] ? ego.u[i] : 1.0;
    m.bits[i] = u > u_ego;
  }
  return m;
}

CellMask response_mask(const UncertaintyGrid& coop, const CellMask& request, double u_coop,
                       Strategy strategy, const CellMask* road_mask) {
  require_same_frame(coop.grid, request.grid);
  if (strategy == Strategy::road) {
    if (road_mask == nullptr) throw std::invalid_argument("road strategy needs a road mask");
    require_same_frame(coop.grid, road_mask->grid);
  }
  CellMask m = CellMask::filled(coop.grid, false);
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    bool keep = request.bits[i] && coop.observed[i] && coop.u[i] < u_coop;
    if (strategy == Strategy::road) keep = keep && road_mask->bits[i];
    m.bits[i] = keep;
  }
  return m;
}

CpmPayload make_payload(const BevGrid& grid, const CellMask& mask, std::uint32_t agent_id,
                        std::uint32_t frame_id, Layer layer) {
  require_same_frame(grid.grid, mask.grid);
  if (grid.grid.width > 0xFFFF || grid.grid.height > 0xFFFF) {
    throw std::invalid_argument("grid too large for the CPM format");
  }
  CpmPayload p;
  p.agent_id = agent_id;
  p.frame_id = frame_id;
  p.layer = layer;
  p.origin_x = static_cast<float>(grid.grid.origin_x);
  p.origin_y = static_cast<float>(grid.grid.origin_y);
  p.cell_size = static_cast<float>(grid.grid.resolution);
  p.width = static_cast<std::uint16_t>(grid.grid.width);
  p.height = static_cast<std::uint16_t>(grid.grid.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i]) continue;
    const auto col = static_cast<std::uint16_t>(i % static_cast<std::size_t>(grid.grid.width));
    const auto row = static_cast<std::uint16_t>(i / static_cast<std::size_t>(grid.grid.width));
    p.cells.push_back({col, row, static_cast<float>(grid.e_fg[i]), static_cast<float>(grid.e_bg[i])});
  }
  return p;
}

std::vector<std::uint8_t> encode_cpm(const CpmPayload& p) {
  std::vector<std::uint8_t> out;
  out.reserve(kCpmHeaderBytes + kCpmCellBytes * p.cells.size());
  for (const char c : {'C', 'P', 'M', '1'}) out.push_back(static_cast<std::uint8_t>(c));
  put<std::uint8_t>(out, kCpmVersion);
  put(out, p.agent_id);
  put(out, p.frame_id);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(p.layer));
  put(out, p.origin_x);
  put(out, p.origin_y);
  put(out, p.cell_size);
  put(out, p.width);
  put(out, p.height);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.cells.size()));
  for (const CpmCell& c : p.cells) {
    put(out, c.col);
    put(out, c.row);
    put(out, c.e_fg);
    put(out, c.e_bg);
  }
  return out;
}

CpmPayload decode_cpm(std::span<const std::uint8_t> bytes) {
  using Kind = CpmDecodeError::Kind;
  Reader r(bytes);
  const char magic[4] = {static_cast<char>(r.get<std::uint8_t>()),
                         static_cast<char>(r.get<std::uint8_t>()),
                         static_cast<char>(r.get<std::uint8_t>()),
                         static_cast<char>(r.get<std::uint8_t>())};
  if (std::memcmp(magic, "CPM1", 4) != 0) throw CpmDecodeError(Kind::bad_magic, "bad CPM magic");
  if (r.get<std::uint8_t>() != kCpmVersion) {
    throw CpmDecodeError(Kind::bad_version, "unsupported CPM version");
  }
  CpmPayload p;
  p.agent_id = r.get<std::uint32_t>();
  p.frame_id = r.get<std::uint32_t>();
  const auto layer = r.get<std::uint8_t>();
  if (layer > 1) throw CpmDecodeError(Kind::bad_layer, "unknown CPM layer");
  p.layer = static_cast<Layer>(layer);
  p.origin_x = r.get<float>();
  p.origin_y = r.get<float>();
  p.cell_size = r.get<float>();
  p.width = r.get<std::uint16_t>();
  p.height = r.get<std::uint16_t>();
  const auto n = r.get<std::uint32_t>();
  if (r.remaining() < static_cast<std::size_t>(n) * kCpmCellBytes) {
    throw CpmDecodeError(Kind::truncated, "CPM payload truncated");
  }
  if (r.remaining() > static_cast<std::size_t>(n) * kCpmCellBytes) {
    throw CpmDecodeError(Kind::trailing_bytes, "trailing bytes after CPM records");
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(p.width) * p.height, 0);
  p.cells.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    CpmCell c;
    c.col = r.get<std::uint16_t>();
    c.row = r.get<std::uint16_t>();
    c.e_fg = r.get<float>();
    c.e_bg = r.get<float>();
    if (c.col >= p.width || c.row >= p.height) {
      throw CpmDecodeError(Kind::out_of_bounds, "CPM cell outside the grid");
    }
    std::uint8_t& flag = seen[static_cast<std::size_t>(c.row) * p.width + c.col];
    if (flag) throw CpmDecodeError(Kind::duplicate_cell, "duplicate CPM cell");
    flag = 1;
    if (!(c.e_fg >= 0.0f && c.e_bg >= 0.0f)) {
      throw CpmDecodeError(Kind::negative_evidence, "negative or NaN CPM evidence");
    }
    p.cells.push_back(c);
  }
  return p;
}

namespace {

void require_payload_frame(const GridSpec& g, const CpmPayload& payload) {
  if (payload.origin_x != static_cast<float>(g.origin_x) ||
      payload.origin_y != static_cast<float>(g.origin_y) ||
      payload.cell_size != static_cast<float>(g.resolution) || payload.width != g.width ||
      payload.height != g.height) {
    throw std::invalid_argument("CPM frame does not match the ego grid");
  }
}

}  // namespace

void fuse_into(BevGrid& ego, const CpmPayload& payload) {
  const GridSpec& g = ego.grid;
  require_payload_frame(g, payload);
  for (const CpmCell& c : payload.cells) {
    const std::size_t i = g.index(c.col, c.row);
    ego.e_fg[i] += c.e_fg;
    ego.e_bg[i] += c.e_bg;
    ego.observed[i] = 1;
  }
}

BevGrid fuse(const BevGrid& ego, const CpmPayload& payload) {
  BevGrid out = ego;
  fuse_into(out, payload);
  return out;
}

BevGrid fuse_all(const BevGrid& ego, std::span<const CpmPayload> payloads) {
  const GridSpec& g = ego.grid;
  std::vector<double> r_fg(g.cell_count(), 0.0), r_bg(g.cell_count(), 0.0);
  BevGrid out = ego;
  for (const CpmPayload& p : payloads) {
    require_payload_frame(g, p);
    for (const CpmCell& c : p.cells) {
      const std::size_t i = g.index(c.col, c.row);
      r_fg[i] += c.e_fg;
      r_bg[i] += c.e_bg;
      out.observed[i] = 1;
    }
  }
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    out.e_fg[i] += r_fg[i];
    out.e_bg[i] += r_bg[i];
  }
  return out;
}

}  // namespace gevbev
