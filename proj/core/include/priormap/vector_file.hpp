#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "priormap/map_vector.hpp"

namespace priormap {

// Line-oriented vector interchange format. One record per line, fields
// separated by whitespace:
//
//   <id> <class> <confidence> <e1> <n1> <z1> <e2> <n2> <z2> ...
//
// <class> is one of divider, ped_crossing, boundary. At least two (e, n, z)
// triples are required. Blank lines are ignored and "#" starts a comment.
// Numbers are written in shortest round-trip form so write -> read is exact.
std::vector<MapVector> parse_vectors(std::istream& in, Layer layer = Layer::static_map);
void format_vectors(std::ostream& out, std::span<const MapVector> vectors);

std::vector<MapVector> read_vectors(const std::filesystem::path& path,
                                    Layer layer = Layer::static_map);
void write_vectors(const std::filesystem::path& path, std::span<const MapVector> vectors);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace priormap
