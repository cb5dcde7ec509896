#include <benchmark/benchmark.h>

#include <map>

#include <priormap/evaluation.hpp>
#include <priormap/prior_assembly.hpp>
#include <priormap/sim.hpp>

using namespace priormap;

namespace {

RandomWorld& world_of(std::size_t count) {
  static std::map<std::size_t, RandomWorld> cache;
  auto it = cache.find(count);
  if (it == cache.end()) {
    Rng rng(count);
    it = cache.emplace(count, random_world(count, PerceptionRange{}.long_side(), rng)).first;
  }
  return it->second;
}

std::vector<EgoPose> poses_in(const RandomWorld& w, int n) {
  Rng rng(99);
  std::vector<EgoPose> out;
  for (int k = 0; k < n; ++k) out.push_back(random_pose_in(w, rng));
  return out;
}

void BM_Retrieve(benchmark::State& state) {
  const auto& w = world_of(static_cast<std::size_t>(state.range(0)));
  const auto poses = poses_in(w, 64);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(w.map.retrieve(Layer::static_map, poses[k++ % poses.size()], PerceptionRange{}));
  }
}
BENCHMARK(BM_Retrieve)->Arg(100)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_Refresh(benchmark::State& state) {
  GlobalMap map(60.0);
  Rng rng(5);
  std::vector<MapVector> preds;
  for (int j = 0; j < 30; ++j) {
    preds.push_back(MapVector{0, static_cast<ElementClass>(j % 3),
                              Polyline3({{rng.uniform(-20, 20), rng.uniform(-10, 10), 0}, {rng.uniform(-20, 20), 3, 0}}),
                              0.9, Layer::temporal});
  }
  for (auto _ : state) {
    map.refresh(preds, EgoPose{rng.uniform(-500, 500), rng.uniform(-500, 500), 0, 0}, RefreshConfig{});
  }
}
BENCHMARK(BM_Refresh)->Unit(benchmark::kMicrosecond);

void BM_RasterizeFusion(benchmark::State& state) {
  const auto& w = world_of(10000);
  const auto poses = poses_in(w, 64);
  std::vector<std::vector<MapVector>> frames;
  for (const auto& p : poses) frames.push_back(w.map.retrieve(Layer::static_map, p, PerceptionRange{}));
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& f = frames[k++ % frames.size()];
    benchmark::DoNotOptimize(assemble_from_vectors(Mode::temporal_map_fusion, f, f, RasterConfig{}, kDefaultVerticalBand));
  }
}
BENCHMARK(BM_RasterizeFusion)->Unit(benchmark::kMicrosecond);

void BM_ChamferDistance(benchmark::State& state) {
  const Polyline3 a({{0, 0, 0}, {5, 1, 0}, {9, 4, 0}});
  const Polyline3 b({{0, 1, 0}, {6, 1, 0}, {10, 5, 0}});
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_distance(a, b));
}
BENCHMARK(BM_ChamferDistance);

}  // namespace

BENCHMARK_MAIN();
