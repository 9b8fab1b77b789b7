#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gevbev/evmap.hpp"

namespace gevbev {

/// Binary P5, gray = round(255 (1 - u)), unobserved cells 0. Top row is max y.
std::vector<std::uint8_t> render_uncertainty_pgm(const BevGrid& grid);

/// Binary P6 on observed cells: (0, round(255 p_fg), round(255 p_bg)); black elsewhere.
std::vector<std::uint8_t> render_confidence_ppm(const BevGrid& grid);

/// Binary P5, 255 on observed cells, 0 elsewhere.
std::vector<std::uint8_t> render_observed_pgm(const BevGrid& grid);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace gevbev
