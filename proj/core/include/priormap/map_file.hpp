#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "priormap/tile_store.hpp"

namespace priormap {

// Binary global-map container, all fields little-endian:
//
//   "UPPM"            4 bytes magic
//   version           u16 (currently 1)
//   tile_side         f64
//   then two layer sections, temporal first, static second:
//     tile_count      u64
//     per tile:       i (i64), j (i64), vector_count (u64)
//       per vector:   id (u64), class (u8), confidence (f64),
//                     point_count (u32), point_count x (e, n, z) f64
//
// Tiles appear in ascending (i, j) order; vectors in stored order.
inline constexpr std::uint16_t kMapFileVersion = 1;

std::vector<std::uint8_t> encode_map(const GlobalMap& map);

// Throws DecodeError (with the failing byte offset) on any malformed input;
// never returns a partially decoded map.
GlobalMap decode_map(std::span<const std::uint8_t> bytes);

void save_map(const GlobalMap& map, const std::filesystem::path& path);
GlobalMap load_map(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace priormap
