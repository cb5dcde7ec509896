#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "priormap/sim.hpp"

namespace priormap {

// JSON form of a generated world: generator settings, origin, elements,
// trajectory and road strips. Doubles round-trip exactly.
std::string format_world(const World& world);
// Throws ParseError (line 0) on malformed or inconsistent input.
World parse_world(std::string_view json);

// Plain-text simulation config, one `key = value` per line, '#' comments:
//
//   world.seed, world.blocks, world.block_size, world.lane_width,
//   world.crossing_density, world.piece_length, world.grade,
//   world.corner_radius, world.step, world.frames
//   replay.seed, replay.detector_noise_sigma, replay.detector_dropout,
//   replay.confidence_sigma_ref, replay.frame_rate, replay.map_coverage
//   refresh.tau
//   policy          inference | sampled
//   ratio           non,temporal,fusion
//   tile_side       meters, 0 = long side of the range
//   vertical_band   meters, "inf" disables the filter
//   strict_3x3      true | false
//   restart_frames  comma-separated frame indices
//
// Unset keys keep their defaults. Unknown keys are a ConfigError.
struct SimConfig {
  WorldSpec world{};
  EpisodeConfig episode{};
};

SimConfig parse_sim_config(std::string_view text);
std::string format_sim_config(const SimConfig& cfg);

void save_world(const World& world, const std::filesystem::path& path);
World load_world(const std::filesystem::path& path);

}  // namespace priormap
