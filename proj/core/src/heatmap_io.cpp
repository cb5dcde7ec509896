#include "priormap/heatmap_io.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "priormap/errors.hpp"
#include "priormap/map_file.hpp"

namespace priormap {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[at + static_cast<std::size_t>(k)]) << (8 * k);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_heatmap(const Heatmap& grid) {
  const auto& s = grid.shape();
  std::vector<std::uint8_t> out{'U', 'P', 'H', 'M'};
  out.reserve(16 + grid.data().size() * 4);
  put_u32(out, static_cast<std::uint32_t>(s.channels));
  put_u32(out, static_cast<std::uint32_t>(s.rows));
  put_u32(out, static_cast<std::uint32_t>(s.cols));
  for (auto cell : grid.data()) put_u32(out, std::bit_cast<std::uint32_t>(cell ? 1.0f : 0.0f));
  return out;
}

Heatmap decode_heatmap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw DecodeError("truncated heatmap header", bytes.size());
  if (std::memcmp(bytes.data(), "UPHM", 4) != 0) throw DecodeError("bad heatmap magic", 0);
  const GridShape shape{static_cast<int>(get_u32(bytes, 4)), static_cast<int>(get_u32(bytes, 8)),
                        static_cast<int>(get_u32(bytes, 12))};
  if (shape.channels <= 0 || shape.rows <= 0 || shape.cols <= 0) {
    throw DecodeError("heatmap dimensions must be positive", 4);
  }
  const std::size_t cells = static_cast<std::size_t>(shape.channels) * static_cast<std::size_t>(shape.rows) *
                            static_cast<std::size_t>(shape.cols);
  if (bytes.size() != 16 + cells * 4) {
    throw DecodeError("heatmap payload size does not match header", std::min(bytes.size(), 16 + cells * 4));
  }
  Heatmap grid(shape);
  std::size_t at = 16;
  for (int c = 0; c < shape.channels; ++c) {
    for (int r = 0; r < shape.rows; ++r) {
      for (int col = 0; col < shape.cols; ++col, at += 4) {
        const float v = std::bit_cast<float>(get_u32(bytes, at));
        if (v == 1.0f) {
          grid.set(c, r, col);
        } else if (v != 0.0f) {
          throw DecodeError("heatmap cell is not binary", at);
        }
      }
    }
  }
  return grid;
}

std::vector<std::uint8_t> encode_pgm(const Heatmap& grid, int channel) {
  const auto& s = grid.shape();
  if (channel < 0 || channel >= s.channels) throw ConfigError("heatmap channel out of range");
  const std::string header = "P5\n" + std::to_string(s.cols) + " " + std::to_string(s.rows) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols));
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) out.push_back(grid.at(channel, r, c) ? 255 : 0);
  }
  return out;
}

void RgbImage::put(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t at = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  pixels[at] = r;
  pixels[at + 1] = g;
  pixels[at + 2] = b;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

std::vector<std::filesystem::path> write_heatmap_files(const Heatmap& grid,
                                                       const std::filesystem::path& stem) {
  std::vector<std::filesystem::path> written;
  auto raw_path = stem;
  raw_path += ".bin";
  write_file_bytes(raw_path, encode_heatmap(grid));
  written.push_back(raw_path);
  for (int c = 0; c < grid.shape().channels; ++c) {
    auto pgm_path = stem;
    pgm_path += "_";
    pgm_path += c < static_cast<int>(kNumClasses) ? std::string(to_string(static_cast<ElementClass>(c)))
                                                  : "ch" + std::to_string(c);
    pgm_path += ".pgm";
    write_file_bytes(pgm_path, encode_pgm(grid, c));
    written.push_back(pgm_path);
  }
  return written;
}

}  // namespace priormap
