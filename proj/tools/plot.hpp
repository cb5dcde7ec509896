#pragma once

#include <span>

#include <priormap/heatmap_io.hpp>
#include <priormap/map_vector.hpp>

namespace priormap::cli {

// Two top-down panels side by side, left before and right after, sharing
// one scale so displacements are visible. Classes are colour-coded.
RgbImage render_before_after(std::span<const MapVector> before, std::span<const MapVector> after,
                             int panel_px = 480);

}  // namespace priormap::cli
