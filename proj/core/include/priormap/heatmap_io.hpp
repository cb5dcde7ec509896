#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "priormap/prior_assembly.hpp"

namespace priormap {

// Raw heatmap container, little-endian:
//
//   "UPHM"     4 bytes magic
//   channels   u32
//   rows       u32
//   cols       u32
//   data       channels * rows * cols float32, row-major, 0.0f or 1.0f
std::vector<std::uint8_t> encode_heatmap(const Heatmap& grid);
Heatmap decode_heatmap(std::span<const std::uint8_t> bytes);

// Binary portable graymap (P5, maxval 255) of one channel; set cells are 255.
std::vector<std::uint8_t> encode_pgm(const Heatmap& grid, int channel);

// RGB image as binary portable pixmap (P6).
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}
  void put(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

// Writes <stem>.bin (raw container) and <stem>_<class>.pgm per channel.
// Returns the paths written.
std::vector<std::filesystem::path> write_heatmap_files(const Heatmap& grid,
                                                       const std::filesystem::path& stem);

}  // namespace priormap
