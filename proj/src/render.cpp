#include "gevbev/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace gevbev {

namespace {

std::vector<std::uint8_t> header(const char* magic, const GridSpec& g) {
  const std::string h = std::string(magic) + "\n" + std::to_string(g.width) + " " +
                        std::to_string(g.height) + "\n255\n";
  return {h.begin(), h.end()};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

template <typename Pixel>
std::vector<std::uint8_t> render(const char* magic, const BevGrid& grid, Pixel pixel) {
  const GridSpec& g = grid.grid;
  std::vector<std::uint8_t> out = header(magic, g);
  for (int row = g.height - 1; row >= 0; --row) {
    for (int col = 0; col < g.width; ++col) pixel(g.index(col, row), out);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> render_uncertainty_pgm(const BevGrid& grid) {
  return render("P5", grid, [&](std::size_t i, std::vector<std::uint8_t>& out) {
    out.push_back(grid.observed[i] ? to_byte(1.0 - grid.cell(i).u) : 0);
  });
}

std::vector<std::uint8_t> render_confidence_ppm(const BevGrid& grid) {
  return render("P6", grid, [&](std::size_t i, std::vector<std::uint8_t>& out) {
    if (!grid.observed[i]) {
      out.insert(out.end(), {0, 0, 0});
      return;
    }
    const DirichletResult d = grid.cell(i);
    out.insert(out.end(), {0, to_byte(d.p_hat[kFg]), to_byte(d.p_hat[kBg])});
  });
}

std::vector<std::uint8_t> render_observed_pgm(const BevGrid& grid) {
  return render("P5", grid, [&](std::size_t i, std::vector<std::uint8_t>& out) {
    out.push_back(grid.observed[i] ? 255 : 0);
  });
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace gevbev
