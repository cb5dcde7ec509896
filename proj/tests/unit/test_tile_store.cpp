#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <priormap/errors.hpp>
#include <priormap/tile_store.hpp>

#include "test_support.hpp"

using namespace priormap;
using namespace priormap::testing;

namespace {

std::vector<TileIndex> tiles(std::initializer_list<std::pair<int, int>> list) {
  std::vector<TileIndex> out;
  for (auto [i, j] : list) out.push_back({i, j});
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(TileIndex, Examples) {
  EXPECT_EQ(tile_index(0.0, 0.0, 60), (TileIndex{0, 0}));
  EXPECT_EQ(tile_index(123456.7, 654321.9, 60), (TileIndex{2057, 10905}));
  EXPECT_EQ(tile_index(-1.0, 5.0, 60), (TileIndex{-1, 0}));
  EXPECT_EQ(tile_index(-60.0, -60.000001, 60), (TileIndex{-1, -2}));
  EXPECT_THROW(tile_index(0, 0, 0), ConfigError);
  EXPECT_THROW(tile_index(0, 0, -5), ConfigError);
}

TEST(TileIndex, MatchesFloorDivision) {
  Rng rng(21);
  for (int k = 0; k < 200000; ++k) {
    const double l = rng.uniform(1.0, 200.0);
    const double e = rng.uniform(-1e6, 1e6);
    const double n = rng.uniform(-1e7, 1e7);
    const TileIndex t = tile_index(e, n, l);
    ASSERT_EQ(t.i, static_cast<std::int64_t>(std::floor(e / l)));
    ASSERT_EQ(t.j, static_cast<std::int64_t>(std::floor(n / l)));
  }
}

TEST(TileOffset, InHalfOpenTile) {
  Rng rng(22);
  for (int k = 0; k < 100000; ++k) {
    const double e = rng.uniform(-1e6, 1e6);
    const double f = tile_offset(e, 60);
    ASSERT_GE(f, 0.0);
    ASSERT_LT(f, 60.0);
  }
  EXPECT_DOUBLE_EQ(tile_offset(-1.0, 60), 59.0);
  EXPECT_DOUBLE_EQ(tile_offset(90.0, 60), 30.0);
}

TEST(Adjacency, Examples) {
  EXPECT_EQ(adjacent_tiles(30, 30, 60), tiles({{0, 0}}));
  EXPECT_EQ(adjacent_tiles(10, 10, 60), tiles({{-1, -1}, {-1, 0}, {0, -1}, {0, 0}}));
  EXPECT_EQ(adjacent_tiles(50, 10, 60), tiles({{0, -1}, {0, 0}, {1, -1}, {1, 0}}));
  EXPECT_EQ(adjacent_tiles(30, 10, 60), tiles({{0, -1}, {0, 0}}));
  EXPECT_EQ(adjacent_tiles(-30, 90, 60), tiles({{-1, 1}}));
  EXPECT_EQ(adjacent_tiles(-1, -59, 60), tiles({{-1, -2}, {-1, -1}, {0, -2}, {0, -1}}));
  EXPECT_THROW(adjacent_tiles(0, 0, 0), ConfigError);
}

TEST(Adjacency, SizeAndTargetProperty) {
  Rng rng(23);
  for (int k = 0; k < 100000; ++k) {
    const double e = rng.uniform(-1e5, 1e5);
    const double n = rng.uniform(-1e5, 1e5);
    const auto adj = adjacent_tiles(e, n, 60);
    ASSERT_TRUE(adj.size() == 1 || adj.size() == 2 || adj.size() == 4);
    ASSERT_NE(std::find(adj.begin(), adj.end(), tile_index(e, n, 60)), adj.end());
  }
}

TEST(Adjacency, Neighbourhood3x3) {
  const auto block = neighbourhood_3x3(10, -10, 60);
  ASSERT_EQ(block.size(), 9u);
  EXPECT_EQ(block.front(), (TileIndex{-1, -2}));
  EXPECT_EQ(block.back(), (TileIndex{1, 0}));
}

TEST(Refresh, ConfidenceGate) {
  GlobalMap map(60);
  const EgoPose pose{100, 100, 0, 0};
  const std::vector<MapVector> low{segment(1, ElementClass::divider, 0, 0, 5, 0, 0.35)};
  EXPECT_EQ(map.refresh(low, pose, RefreshConfig{0.4}), 0u);
  EXPECT_EQ(map.registration_count(Layer::temporal), 0u);

  const std::vector<MapVector> high{segment(1, ElementClass::divider, 0, 0, 5, 0, 0.85)};
  EXPECT_EQ(map.refresh(high, pose, RefreshConfig{0.8}), 1u);
  const auto t = map.tiles(Layer::temporal);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.begin()->first, tile_index(100, 100, 60));
  const auto& stored = *t.begin()->second.front();
  EXPECT_EQ(stored.layer, Layer::temporal);
  EXPECT_NEAR(stored.geometry[0].e, 100, 1e-12);
  EXPECT_NEAR(stored.geometry[1].e, 105, 1e-12);
  EXPECT_EQ(map.registration_count(Layer::static_map), 0u);
}

TEST(Refresh, StrictlyGreaterThanTau) {
  GlobalMap map(60);
  const std::vector<MapVector> at{segment(1, ElementClass::divider, 0, 0, 5, 0, 0.8)};
  EXPECT_EQ(map.refresh(at, EgoPose{}, RefreshConfig{0.8}), 0u);
}

TEST(Refresh, EmptyIsNoOp) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(5, ElementClass::boundary, 1, 1, 2, 2)});
  const GlobalMap before = map;
  EXPECT_EQ(map.refresh({}, EgoPose{}, RefreshConfig{}), 0u);
  EXPECT_EQ(map, before);
}

TEST(Refresh, OtherTilesUnchanged) {
  Rng rng(24);
  GlobalMap map(60);
  for (int frame = 0; frame < 200; ++frame) {
    const EgoPose pose = random_pose(rng, 300);
    const auto before = map.tiles(Layer::temporal);
    std::vector<MapVector> preds;
    for (int k = 0; k < 5; ++k) {
      preds.push_back(MapVector{static_cast<std::uint64_t>(k), ElementClass::divider,
                                random_polyline(rng, rng.uniform(-20, 20), rng.uniform(-10, 10)),
                                rng.uniform01(), Layer::temporal});
    }
    map.refresh(preds, pose, RefreshConfig{0.5});
    const auto after = map.tiles(Layer::temporal);
    const TileIndex target = tile_index(pose.utm_e, pose.utm_n, 60);
    for (const auto& [tile, bucket] : before) {
      if (tile == target) continue;
      ASSERT_EQ(after.at(tile), bucket);
    }
    for (const auto& [tile, bucket] : after) {
      if (tile != target) ASSERT_TRUE(before.contains(tile));
    }
  }
}

TEST(Refresh, FreshIdsAreUnique) {
  GlobalMap map(60);
  const std::vector<MapVector> preds{segment(7, ElementClass::divider, 0, 0, 1, 0, 0.9),
                                     segment(7, ElementClass::divider, 0, 1, 1, 1, 0.9)};
  map.refresh(preds, EgoPose{}, RefreshConfig{0.5});
  map.refresh(preds, EgoPose{}, RefreshConfig{0.5});
  EXPECT_EQ(map.unique_vector_count(Layer::temporal), 4u);
  const auto got = map.retrieve(Layer::temporal, EgoPose{}, PerceptionRange{});
  EXPECT_EQ(got.size(), 4u);
}

TEST(IngestStatic, InsideOneTile) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(1, ElementClass::divider, 10, 10, 20, 20)});
  const auto t = map.tiles(Layer::static_map);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.begin()->first, (TileIndex{0, 0}));
}

TEST(IngestStatic, SpanningTwoTilesRetrievedOnce) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(1, ElementClass::divider, 50, 10, 70, 10)});
  const auto t = map.tiles(Layer::static_map);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_TRUE(t.contains(TileIndex{0, 0}));
  EXPECT_TRUE(t.contains(TileIndex{1, 0}));
  for (const EgoPose pose : {EgoPose{40, 10, 0, 0}, EgoPose{80, 10, 0, 0}}) {
    const auto got = map.retrieve(Layer::static_map, pose, PerceptionRange{});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].id, 1u);
  }
}

TEST(IngestStatic, EmptyAndDuplicate) {
  GlobalMap map(60);
  map.ingest_static({});
  EXPECT_EQ(map.tile_count(Layer::static_map), 0u);
  const std::vector<MapVector> v{segment(1, ElementClass::divider, 10, 10, 20, 20)};
  map.ingest_static(v);
  map.ingest_static(v);
  EXPECT_EQ(map.registration_count(Layer::static_map), 1u);
}

TEST(IngestStatic, TouchingBoundaryCountsBothTiles) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(1, ElementClass::divider, 60, 10, 70, 10)});
  const auto t = map.tiles(Layer::static_map);
  EXPECT_TRUE(t.contains(TileIndex{0, 0}));
  EXPECT_TRUE(t.contains(TileIndex{1, 0}));
}

TEST(Retrieve, Examples) {
  GlobalMap map(60);
  EXPECT_TRUE(map.retrieve(Layer::static_map, EgoPose{}, PerceptionRange{}).empty());

  const EgoPose pose{500123.4, 4100456.7, 12.0, 0.7};
  const auto here = ego_to_global(Polyline3({{-1, 0, 0}, {1, 0.5, 0.2}}), pose);
  const auto ahead = ego_to_global(Polyline3({{100, -1, 0}, {101, 1, 0}}), pose);
  map.ingest_static(std::vector<MapVector>{MapVector{1, ElementClass::divider, here, 1.0, Layer::static_map},
                                           MapVector{2, ElementClass::divider, ahead, 1.0, Layer::static_map}});
  const auto got = map.retrieve(Layer::static_map, pose, PerceptionRange{});
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].id, 1u);
  EXPECT_NEAR(got[0].geometry[0].e, -1, 1e-9);
  EXPECT_NEAR(got[0].geometry[1].n, 0.5, 1e-9);
  EXPECT_NEAR(got[0].geometry[1].z, 0.2, 1e-9);
}

TEST(Retrieve, SortedById) {
  GlobalMap map(60);
  std::vector<MapVector> vs;
  for (std::uint64_t id : {9u, 3u, 7u, 1u}) vs.push_back(segment(id, ElementClass::divider, id, 0, id + 1.0, 0));
  map.ingest_static(vs);
  EXPECT_EQ(ids_of(map.retrieve(Layer::static_map, EgoPose{}, PerceptionRange{})),
            (std::vector<std::uint64_t>{1, 3, 7, 9}));
}

TEST(Retrieve, StrictModeMatchesBruteForce) {
  Rng rng(25);
  for (int world = 0; world < 20; ++world) {
    GlobalMap map(60);
    std::vector<MapVector> vs;
    for (std::uint64_t id = 1; id <= 2000; ++id) {
      vs.push_back(MapVector{id, ElementClass::divider, random_polyline(rng, rng.uniform(-400, 400), rng.uniform(-400, 400)),
                             1.0, Layer::static_map});
    }
    map.ingest_static(vs);
    for (int q = 0; q < 50; ++q) {
      const EgoPose pose = random_pose(rng, 400);
      const PerceptionRange range{};
      ASSERT_EQ(ids_of(map.retrieve(Layer::static_map, pose, range, RetrieveOptions{true})),
                brute_force_ids(map, Layer::static_map, pose, range));
    }
  }
}

TEST(Retrieve, DefaultModeCoversHalfTile) {
  Rng rng(26);
  for (int world = 0; world < 20; ++world) {
    GlobalMap map(60);
    std::vector<MapVector> vs;
    for (std::uint64_t id = 1; id <= 2000; ++id) {
      vs.push_back(MapVector{id, ElementClass::divider, random_polyline(rng, rng.uniform(-400, 400), rng.uniform(-400, 400)),
                             1.0, Layer::static_map});
    }
    map.ingest_static(vs);
    for (int q = 0; q < 50; ++q) {
      const EgoPose pose = random_pose(rng, 400);
      const PerceptionRange range{};
      const auto got = ids_of(map.retrieve(Layer::static_map, pose, range));
      const auto all = brute_force_ids(map, Layer::static_map, pose, range);
      // Nothing outside the brute-force set, nothing near the ego missed.
      ASSERT_TRUE(std::includes(all.begin(), all.end(), got.begin(), got.end()));
      for (const auto& v : vs) {
        const auto local = global_to_ego(v.geometry, pose);
        if (!intersects_range(local, range) || min_distance_to_origin(local) > 30.0) continue;
        ASSERT_TRUE(std::binary_search(got.begin(), got.end(), v.id)) << "missed id " << v.id;
      }
    }
  }
}

TEST(Retrieve, TemporalLayerSeparate) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(1, ElementClass::divider, 0, 0, 1, 0)});
  EXPECT_TRUE(map.retrieve(Layer::temporal, EgoPose{}, PerceptionRange{}).empty());
  map.refresh(std::vector<MapVector>{segment(1, ElementClass::boundary, 2, 0, 3, 0, 0.9)}, EgoPose{},
              RefreshConfig{0.5});
  const auto t = map.retrieve(Layer::temporal, EgoPose{}, PerceptionRange{});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].cls, ElementClass::boundary);
  EXPECT_EQ(t[0].layer, Layer::temporal);
}

TEST(GlobalMap, CopyIsIndependentAndClear) {
  GlobalMap map(60);
  map.ingest_static(std::vector<MapVector>{segment(1, ElementClass::divider, 5, 5, 6, 5)});
  GlobalMap copy = map;
  EXPECT_EQ(copy, map);
  copy.clear(Layer::static_map);
  EXPECT_EQ(copy.tile_count(Layer::static_map), 0u);
  EXPECT_EQ(map.tile_count(Layer::static_map), 1u);
  EXPECT_THROW(GlobalMap(0.0), ConfigError);
}
