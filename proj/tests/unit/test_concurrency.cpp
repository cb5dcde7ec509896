#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <priormap/tile_store.hpp>

#include "test_support.hpp"

using namespace priormap;
using namespace priormap::testing;

// Readers see either the old or the new content of a tile, never a torn
// bucket, while a writer keeps refreshing the temporal layer.
TEST(Concurrency, ReadersDuringRefresh) {
  GlobalMap map(60.0);
  Rng rng(17);
  std::vector<MapVector> statics;
  for (std::uint64_t id = 1; id <= 2000; ++id) {
    statics.push_back(MapVector{id, static_cast<ElementClass>(id % 3),
                                random_polyline(rng, rng.uniform(-300, 300), rng.uniform(-300, 300)), 1.0,
                                Layer::static_map});
  }
  map.ingest_static(statics);
  const EgoPose pose{10, -5, 0, 0.3};
  const auto expected = map.retrieve(Layer::static_map, pose, PerceptionRange{});

  std::atomic<bool> stop{false};
  std::atomic<int> mismatches{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      while (!stop.load()) {
        if (map.retrieve(Layer::static_map, pose, PerceptionRange{}) != expected) ++mismatches;
        const auto temporal = map.retrieve(Layer::temporal, pose, PerceptionRange{});
        for (const auto& v : temporal) {
          if (v.layer != Layer::temporal || v.geometry.size() < 2) ++mismatches;
        }
      }
    });
  }
  Rng wrng(18);
  for (int k = 0; k < 300; ++k) {
    std::vector<MapVector> preds;
    for (int j = 0; j < 5; ++j) {
      preds.push_back(make_vector(0, ElementClass::divider, {{wrng.uniform(-20, 20), 0, 0}, {0, 5, 0}}, 0.9));
    }
    map.refresh(preds, pose, RefreshConfig{});
  }
  stop = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_GT(map.retrieve(Layer::temporal, pose, PerceptionRange{}).size(), 0u);
}
