#include "plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace priormap::cli {

namespace {

constexpr int kMargin = 12;
constexpr int kGap = 8;

std::array<std::uint8_t, 3> colour(ElementClass cls) {
  switch (cls) {
    case ElementClass::divider: return {230, 140, 20};
    case ElementClass::ped_crossing: return {30, 90, 220};
    case ElementClass::boundary: return {200, 30, 40};
  }
  return {0, 0, 0};
}

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1,
               std::array<std::uint8_t, 3> c) {
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.put(x, y, c[0], c[1], c[2]);
  }
}

}  // namespace

RgbImage render_before_after(std::span<const MapVector> before, std::span<const MapVector> after,
                             int panel_px) {
  double min_e = std::numeric_limits<double>::infinity(), min_n = min_e;
  double max_e = -min_e, max_n = -min_e;
  for (auto set : {before, after}) {
    for (const auto& v : set) {
      const Bounds2 b = bounds(v.geometry);
      min_e = std::min(min_e, b.min_e);
      min_n = std::min(min_n, b.min_n);
      max_e = std::max(max_e, b.max_e);
      max_n = std::max(max_n, b.max_n);
    }
  }
  RgbImage img(2 * panel_px + kGap, panel_px);
  for (int y = 0; y < panel_px; ++y) {
    for (int x = panel_px; x < panel_px + kGap; ++x) img.put(x, y, 160, 160, 160);
  }
  if (!(max_e >= min_e)) return img;

  const double extent = std::max({max_e - min_e, max_n - min_n, 1.0});
  const double scale = (panel_px - 2 * kMargin) / extent;
  const double cx = 0.5 * (min_e + max_e);
  const double cy = 0.5 * (min_n + max_n);
  auto draw = [&](std::span<const MapVector> set, int x_off) {
    for (const auto& v : set) {
      const auto& pts = v.geometry.points();
      for (std::size_t k = 1; k < pts.size(); ++k) {
        // North is up.
        const double x0 = x_off + panel_px / 2.0 + (pts[k - 1].e - cx) * scale;
        const double y0 = panel_px / 2.0 - (pts[k - 1].n - cy) * scale;
        const double x1 = x_off + panel_px / 2.0 + (pts[k].e - cx) * scale;
        const double y1 = panel_px / 2.0 - (pts[k].n - cy) * scale;
        draw_line(img, x0, y0, x1, y1, colour(v.cls));
      }
    }
  };
  draw(before, 0);
  draw(after, panel_px + kGap);
  return img;
}

}  // namespace priormap::cli
