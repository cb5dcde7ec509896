#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "priormap/geometry.hpp"
#include "priormap/map_vector.hpp"
#include "priormap/random.hpp"
#include "priormap/tile_store.hpp"

namespace priormap {

enum class Mode : std::uint8_t { non_prior = 0, temporal_prior = 1, temporal_map_fusion = 2 };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

struct ModeRatio {
  double p_non = 0.5;
  double p_temporal = 0.3;
  double p_fusion = 0.2;
};

// Each probability >= 0 and the sum within 1e-12 of one.
void validate(const ModeRatio& ratio);

Mode sample_mode(const ModeRatio& ratio, Rng& rng);

// Keeps vectors whose mean vertex elevation is within `band` of ego_z.
// band = +inf disables the filter.
std::vector<MapVector> vertical_filter(std::span<const MapVector> vectors, double ego_z,
                                       double band);

inline constexpr double kDefaultVerticalBand = 3.0;
inline constexpr double kNoVerticalFilter = std::numeric_limits<double>::infinity();

struct RasterConfig {
  double cell = 0.3;
  PerceptionRange range{};
  int classes = static_cast<int>(kNumClasses);
  // Extra cells painted on each side of a stroke; 0 gives 1-cell-wide lines.
  int line_halfwidth = 0;
};

struct GridShape {
  int channels;
  int rows;  // along the forward axis, row 0 = front-most
  int cols;  // along the left axis, col 0 = left-most

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Throws ConfigError unless cell > 0 and both range sides are integral
// multiples of the cell.
GridShape grid_shape(const RasterConfig& cfg);

// Binary occupancy grid [channels x rows x cols], row-major. The ego origin
// sits on the corner shared by cells (rows/2 - 1, cols/2 - 1) and
// (rows/2, cols/2); cells are half-open toward the rear and right.
class Heatmap {
 public:
  Heatmap() = default;
  explicit Heatmap(GridShape shape);

  const GridShape& shape() const noexcept { return shape_; }
  std::uint8_t at(int c, int r, int col) const { return data_[index(c, r, col)]; }
  void set(int c, int r, int col) { data_[index(c, r, col)] = 1; }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::size_t count() const;
  std::size_t count(int channel) const;
  bool all_zero() const { return count() == 0; }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  std::size_t index(int c, int r, int col) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_.rows) +
            static_cast<std::size_t>(r)) *
               static_cast<std::size_t>(shape_.cols) +
           static_cast<std::size_t>(col);
  }

  GridShape shape_{0, 0, 0};
  std::vector<std::uint8_t> data_;
};

// Cell containing an ego-frame point, or nullopt when it is off-grid.
struct Cell {
  int row;
  int col;
  friend bool operator==(const Cell&, const Cell&) = default;
};
std::optional<Cell> cell_of(const Point3& p, const RasterConfig& cfg);

// Per-class binary BEV grid. Each segment marks every cell it passes through
// (grid traversal over the clipped segment); off-grid parts are dropped.
Heatmap rasterize(std::span<const MapVector> vectors, const RasterConfig& cfg);

struct PriorHeatmaps {
  Heatmap temporal;
  Heatmap map;
};

// Builds the two prior heatmaps from already-retrieved ego-frame vectors.
PriorHeatmaps assemble_from_vectors(Mode mode, std::span<const MapVector> temporal_ego,
                                    std::span<const MapVector> map_ego, const RasterConfig& cfg,
                                    double vertical_band);

// Retrieves the layers the mode needs around `pose` and rasterizes them.
// non_prior gives two zero grids, temporal_prior leaves the map grid zero.
PriorHeatmaps assemble_priors(Mode mode, const GlobalMap& map, const EgoPose& pose,
                              const RasterConfig& cfg, double vertical_band,
                              RetrieveOptions opts = {});

// Inference-time switching from prior availability.
Mode select_inference_mode(bool temporal_available, bool map_available);

}  // namespace priormap
