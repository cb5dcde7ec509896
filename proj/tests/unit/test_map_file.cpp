#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include <priormap/errors.hpp>
#include <priormap/map_file.hpp>
#include <priormap/vector_file.hpp>

#include "test_support.hpp"

using namespace priormap;
using namespace priormap::testing;

namespace {

GlobalMap random_map(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  GlobalMap map(60);
  std::vector<MapVector> vs;
  for (std::size_t k = 0; k < count; ++k) {
    vs.push_back(MapVector{k + 1, static_cast<ElementClass>(rng.uniform_int(0, 2)),
                           random_polyline(rng, rng.uniform(-3000, 3000), rng.uniform(-3000, 3000)),
                           rng.uniform01(), Layer::static_map});
  }
  map.ingest_static(vs);
  for (int f = 0; f < 20; ++f) {
    std::vector<MapVector> preds;
    for (int k = 0; k < 10; ++k) {
      preds.push_back(MapVector{0, ElementClass::divider, random_polyline(rng, rng.uniform(-20, 20), 0),
                                rng.uniform01(), Layer::temporal});
    }
    map.refresh(preds, random_pose(rng, 2000), RefreshConfig{0.3});
  }
  return map;
}

}  // namespace

TEST(MapFile, EmptyRoundTrip) {
  const GlobalMap map(42.5);
  const auto bytes = encode_map(map);
  EXPECT_EQ(bytes.size(), 4u + 2 + 8 + 8 + 8);
  EXPECT_EQ(std::memcmp(bytes.data(), "UPPM", 4), 0);
  EXPECT_EQ(decode_map(bytes), map);
}

TEST(MapFile, RandomMapRoundTripsBitIdentically) {
  const GlobalMap map = random_map(10000, 31);
  const auto bytes = encode_map(map);
  const GlobalMap back = decode_map(bytes);
  EXPECT_EQ(back, map);
  EXPECT_EQ(encode_map(back), bytes);
}

TEST(MapFile, SaveLoad) {
  const auto path = std::filesystem::temp_directory_path() / "priormap_test_map.pmap";
  const GlobalMap map = random_map(500, 32);
  save_map(map, path);
  EXPECT_EQ(load_map(path), map);
  std::filesystem::remove(path);
  EXPECT_THROW(load_map(path), IoError);
}

TEST(MapFile, HeaderLayout) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(258, ElementClass::boundary, 1, 2, 3, 4, 0.5)});
  const auto b = encode_map(map);
  // magic, version 1 (LE), tile side 60.0 (LE IEEE-754)
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  double side;
  std::memcpy(&side, &b[6], 8);
  EXPECT_EQ(side, 60.0);
  // temporal tile count 0, static tile count 1
  EXPECT_EQ(b[14], 0);
  EXPECT_EQ(b[22], 1);
  // tile (0, 0) with one vector whose id is 258 = 0x0102
  const std::size_t vec = 30 + 8 + 8 + 8;
  EXPECT_EQ(b[vec], 0x02);
  EXPECT_EQ(b[vec + 1], 0x01);
  EXPECT_EQ(b[vec + 8], 2);  // boundary
  EXPECT_EQ(b.size(), vec + 8 + 1 + 8 + 4 + 2 * 24);
}

TEST(MapFile, TruncationIsReportedWithOffset) {
  const auto bytes = encode_map(random_map(50, 33));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{5}, std::size_t{13}, bytes.size() / 2,
                          bytes.size() - 1}) {
    const std::span<const std::uint8_t> part(bytes.data(), cut);
    try {
      (void)decode_map(part);
      FAIL() << "decoded a truncated file of " << cut << " bytes";
    } catch (const DecodeError& e) {
      EXPECT_LE(e.offset(), cut);
    }
  }
}

TEST(MapFile, CorruptionDetected) {
  auto bytes = encode_map(random_map(20, 34));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_map(bad_magic), DecodeError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_map(bad_version), DecodeError);
  auto trailing = bytes;
  trailing.push_back(0);
  try {
    decode_map(trailing);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.offset(), bytes.size());
  }
  auto huge_count = bytes;
  huge_count[21] = 0x7f;  // temporal tile count absurdly large
  EXPECT_THROW(decode_map(huge_count), DecodeError);
}

TEST(MapFile, FuzzedInputNeverCrashes) {
  const auto bytes = encode_map(random_map(30, 35));
  Rng rng(36);
  for (int k = 0; k < 3000; ++k) {
    auto copy = bytes;
    const int flips = static_cast<int>(rng.uniform_int(1, 4));
    for (int f = 0; f < flips; ++f) {
      copy[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(copy.size()) - 1))] ^=
          static_cast<std::uint8_t>(1u << rng.uniform_int(0, 7));
    }
    try {
      (void)decode_map(copy);
    } catch (const DecodeError&) {
    }
  }
}

TEST(VectorFile, RoundTripExact) {
  Rng rng(37);
  std::vector<MapVector> vs;
  for (std::uint64_t id = 1; id <= 300; ++id) {
    vs.push_back(MapVector{id, static_cast<ElementClass>(rng.uniform_int(0, 2)),
                           random_polyline(rng, rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6)), rng.uniform01(),
                           Layer::static_map});
  }
  std::ostringstream out;
  format_vectors(out, vs);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_vectors(in), vs);
}

TEST(VectorFile, CommentsAndErrors) {
  std::istringstream ok("# header\n\n1 divider 0.5 0 0 0 1 0 0\n  2 boundary 1 0 0 0 0 1 0 # tail\n");
  const auto vs = parse_vectors(ok);
  ASSERT_EQ(vs.size(), 2u);
  EXPECT_EQ(vs[1].cls, ElementClass::boundary);

  const auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_vectors(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("1 divider 1 0 0 0 1 0 0\n2 lane 1 0 0 0 1 0 0\n"), 2u);
  EXPECT_EQ(line_of("1 divider 1 0 0 0\n"), 1u);
  EXPECT_EQ(line_of("1 divider 1 0 0 0 1 0\n"), 1u);
  EXPECT_EQ(line_of("\n\n1 divider 2 0 0 0 1 0 0\n"), 3u);
  EXPECT_EQ(line_of("1 divider 1 0 0 0 0 0 0\n"), 1u);
  EXPECT_EQ(line_of("x divider 1 0 0 0 1 0 0\n"), 1u);
}

TEST(VectorFile, FormatDoubleShortest) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(60.0), "60");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
