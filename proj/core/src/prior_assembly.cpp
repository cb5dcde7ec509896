#include "priormap/prior_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "priormap/errors.hpp"

namespace priormap {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::non_prior: return "non_prior";
    case Mode::temporal_prior: return "temporal_prior";
    case Mode::temporal_map_fusion: return "temporal_map_fusion";
  }
  return "unknown";
}

std::optional<Mode> parse_mode(std::string_view name) {
  for (auto m : {Mode::non_prior, Mode::temporal_prior, Mode::temporal_map_fusion}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void validate(const ModeRatio& ratio) {
  for (double p : {ratio.p_non, ratio.p_temporal, ratio.p_fusion}) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("mode ratio entries must be >= 0");
  }
  const double sum = ratio.p_non + ratio.p_temporal + ratio.p_fusion;
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("mode ratio must sum to 1");
}

Mode sample_mode(const ModeRatio& ratio, Rng& rng) {
  const double u = rng.uniform01();
  if (u < ratio.p_non) return Mode::non_prior;
  if (u < ratio.p_non + ratio.p_temporal) return Mode::temporal_prior;
  // Guard against the p_fusion == 0 case when rounding leaves u >= p_non + p_temporal.
  if (ratio.p_fusion == 0.0) return ratio.p_temporal > 0.0 ? Mode::temporal_prior : Mode::non_prior;
  return Mode::temporal_map_fusion;
}

std::vector<MapVector> vertical_filter(std::span<const MapVector> vectors, double ego_z,
                                       double band) {
  if (!(band > 0.0)) throw ConfigError("vertical band must be > 0");
  std::vector<MapVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    const auto& pts = v.geometry.points();
    const double mean_z =
        std::accumulate(pts.begin(), pts.end(), 0.0,
                        [](double acc, const Point3& p) { return acc + p.z; }) /
        static_cast<double>(pts.size());
    if (std::abs(mean_z - ego_z) <= band) out.push_back(v);
  }
  return out;
}

GridShape grid_shape(const RasterConfig& cfg) {
  if (!(cfg.cell > 0.0) || !std::isfinite(cfg.cell)) throw ConfigError("raster cell must be > 0");
  validate(cfg.range);
  if (cfg.classes <= 0) throw ConfigError("raster needs at least one class channel");
  if (cfg.line_halfwidth < 0) throw ConfigError("line half-width must be >= 0");
  auto cells = [&](double extent, const char* what) {
    const double ratio = extent / cfg.cell;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1.0) {
      throw ConfigError(std::string(what) + " is not an integral number of cells");
    }
    return static_cast<int>(rounded);
  };
  return {cfg.classes, cells(cfg.range.long_side(), "range long side"),
          cells(cfg.range.short_side(), "range short side")};
}

Heatmap::Heatmap(GridShape shape)
    : shape_(shape),
      data_(static_cast<std::size_t>(shape.channels) * static_cast<std::size_t>(shape.rows) *
                static_cast<std::size_t>(shape.cols),
            0) {}

std::size_t Heatmap::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::size_t Heatmap::count(int channel) const {
  const std::size_t plane = static_cast<std::size_t>(shape_.rows) * static_cast<std::size_t>(shape_.cols);
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(channel));
  return static_cast<std::size_t>(std::count(first, first + static_cast<std::ptrdiff_t>(plane), std::uint8_t{1}));
}

namespace {

struct GridPoint {
  double u;  // row coordinate
  double v;  // col coordinate
};

GridPoint to_grid(const Point3& p, const RasterConfig& cfg) {
  return {(cfg.range.front - p.e) / cfg.cell, (cfg.range.left - p.n) / cfg.cell};
}

// Clips [a, b] to the closed box [0, rows] x [0, cols]. Returns false when
// the segment misses the box.
bool clip_to_grid(GridPoint& a, GridPoint& b, double rows, double cols) {
  const double du = b.u - a.u;
  const double dv = b.v - a.v;
  const double p[4] = {-du, du, -dv, dv};
  const double q[4] = {a.u, rows - a.u, a.v, cols - a.v};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double r = q[k] / p[k];
    if (p[k] < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
  }
  if (t0 > t1) return false;
  const GridPoint start{a.u + t0 * du, a.v + t0 * dv};
  const GridPoint end{a.u + t1 * du, a.v + t1 * dv};
  a = start;
  b = end;
  return true;
}

int clamp_index(double x, int n) {
  return std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
}

class Painter {
 public:
  Painter(Heatmap& grid, int channel, int halfwidth)
      : grid_(grid), channel_(channel), halfwidth_(halfwidth) {}

  void paint(int r, int c) {
    const auto& s = grid_.shape();
    for (int dr = -halfwidth_; dr <= halfwidth_; ++dr) {
      for (int dc = -halfwidth_; dc <= halfwidth_; ++dc) {
        const int rr = r + dr;
        const int cc = c + dc;
        if (rr >= 0 && rr < s.rows && cc >= 0 && cc < s.cols) grid_.set(channel_, rr, cc);
      }
    }
  }

 private:
  Heatmap& grid_;
  int channel_;
  int halfwidth_;
};

// Amanatides-Woo traversal of the cells crossed by [a, b]; a and b are
// already inside the grid box.
void traverse(GridPoint a, GridPoint b, int rows, int cols, Painter& painter) {
  int r = clamp_index(a.u, rows);
  int c = clamp_index(a.v, cols);
  const int r_end = clamp_index(b.u, rows);
  const int c_end = clamp_index(b.v, cols);

  const double du = b.u - a.u;
  const double dv = b.v - a.v;
  const int step_r = du > 0 ? 1 : (du < 0 ? -1 : 0);
  const int step_c = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double t_max_r = step_r > 0 ? (r + 1 - a.u) / du : (step_r < 0 ? (a.u - r) / -du : inf);
  double t_max_c = step_c > 0 ? (c + 1 - a.v) / dv : (step_c < 0 ? (a.v - c) / -dv : inf);
  const double t_delta_r = step_r != 0 ? 1.0 / std::abs(du) : inf;
  const double t_delta_c = step_c != 0 ? 1.0 / std::abs(dv) : inf;

  painter.paint(r, c);
  int budget = std::abs(r_end - r) + std::abs(c_end - c);
  while ((r != r_end || c != c_end) && budget-- > 0) {
    if (t_max_r < t_max_c) {
      r += step_r;
      t_max_r += t_delta_r;
    } else if (t_max_c < t_max_r) {
      c += step_c;
      t_max_c += t_delta_c;
    } else {
      // Exact corner crossing: the diagonal neighbour is the next cell.
      r += step_r;
      c += step_c;
      t_max_r += t_delta_r;
      t_max_c += t_delta_c;
      --budget;
    }
    r = std::clamp(r, 0, rows - 1);
    c = std::clamp(c, 0, cols - 1);
    painter.paint(r, c);
  }
  painter.paint(r_end, c_end);
}

}  // namespace

std::optional<Cell> cell_of(const Point3& p, const RasterConfig& cfg) {
  const GridShape s = grid_shape(cfg);
  const GridPoint g = to_grid(p, cfg);
  if (g.u < 0.0 || g.u > s.rows || g.v < 0.0 || g.v > s.cols) return std::nullopt;
  return Cell{clamp_index(g.u, s.rows), clamp_index(g.v, s.cols)};
}

Heatmap rasterize(std::span<const MapVector> vectors, const RasterConfig& cfg) {
  const GridShape shape = grid_shape(cfg);
  Heatmap grid(shape);
  for (const auto& v : vectors) {
    const int channel = static_cast<int>(v.cls);
    if (channel >= shape.channels) continue;
    Painter painter(grid, channel, cfg.line_halfwidth);
    const auto& pts = v.geometry.points();
    for (std::size_t k = 1; k < pts.size(); ++k) {
      GridPoint a = to_grid(pts[k - 1], cfg);
      GridPoint b = to_grid(pts[k], cfg);
      if (!clip_to_grid(a, b, shape.rows, shape.cols)) continue;
      traverse(a, b, shape.rows, shape.cols, painter);
    }
  }
  return grid;
}

PriorHeatmaps assemble_from_vectors(Mode mode, std::span<const MapVector> temporal_ego,
                                    std::span<const MapVector> map_ego, const RasterConfig& cfg,
                                    double vertical_band) {
  const GridShape shape = grid_shape(cfg);
  PriorHeatmaps out{Heatmap(shape), Heatmap(shape)};
  if (mode == Mode::non_prior) return out;
  // Ego-frame vectors carry elevation relative to the ego, so the band is
  // centred on zero.
  out.temporal = rasterize(vertical_filter(temporal_ego, 0.0, vertical_band), cfg);
  if (mode == Mode::temporal_map_fusion) {
    out.map = rasterize(vertical_filter(map_ego, 0.0, vertical_band), cfg);
  }
  return out;
}

PriorHeatmaps assemble_priors(Mode mode, const GlobalMap& map, const EgoPose& pose,
                              const RasterConfig& cfg, double vertical_band,
                              RetrieveOptions opts) {
  if (mode == Mode::non_prior) return assemble_from_vectors(mode, {}, {}, cfg, vertical_band);
  const auto temporal = map.retrieve(Layer::temporal, pose, cfg.range, opts);
  std::vector<MapVector> static_vectors;
  if (mode == Mode::temporal_map_fusion) {
    static_vectors = map.retrieve(Layer::static_map, pose, cfg.range, opts);
  }
  return assemble_from_vectors(mode, temporal, static_vectors, cfg, vertical_band);
}

Mode select_inference_mode(bool temporal_available, bool map_available) {
  if (map_available) return Mode::temporal_map_fusion;
  if (temporal_available) return Mode::temporal_prior;
  return Mode::non_prior;
}

}  // namespace priormap
