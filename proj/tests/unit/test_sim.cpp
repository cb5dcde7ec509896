#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <priormap/errors.hpp>
#include <priormap/scenario_io.hpp>
#include <priormap/sim.hpp>

#include "test_support.hpp"

using namespace priormap;
using namespace priormap::testing;

namespace {

bool segment_hits_open_rect(const Point3& a, const Point3& b, const Rect& r) {
  // Dense sampling is enough: crossings are straight and well inside.
  for (int s = 0; s <= 1000; ++s) {
    const double t = s / 1000.0;
    const double e = a.e + t * (b.e - a.e), n = a.n + t * (b.n - a.n);
    if (e > r.min_e && e < r.max_e && n > r.min_n && n < r.max_n) return true;
  }
  return false;
}

WorldSpec small_world() {
  WorldSpec w;
  w.blocks = 2;
  w.block_size = 80;
  return w;
}

}  // namespace

TEST(World, Validation) {
  WorldSpec w;
  w.blocks = 0;
  EXPECT_THROW(generate_world(w), ConfigError);
  w = {};
  w.lane_width = -1;
  EXPECT_THROW(generate_world(w), ConfigError);
  w = {};
  w.crossing_density = 2;
  EXPECT_THROW(generate_world(w), ConfigError);
}

TEST(World, DeterministicPerSeed) {
  const World a = generate_world(WorldSpec{});
  const World b = generate_world(WorldSpec{});
  EXPECT_EQ(format_world(a), format_world(b));
  WorldSpec other;
  other.seed = 2;
  EXPECT_NE(format_world(generate_world(other)), format_world(a));
}

TEST(World, SingleBlockHasClosedBoundaryLoop) {
  WorldSpec w;
  w.blocks = 1;
  w.piece_length = 0;  // keep loops whole
  const World world = generate_world(w);
  int loops = 0;
  for (const auto& v : world.elements) {
    if (v.cls != ElementClass::boundary) continue;
    const auto& pts = v.geometry.points();
    if (pts.front() == pts.back() && pts.size() == 5) ++loops;
  }
  EXPECT_EQ(loops, 2);  // the block kerb and the outer kerb
}

TEST(World, PiecesChainIntoLoops) {
  WorldSpec w;
  w.blocks = 1;
  const World world = generate_world(w);
  for (const auto& v : world.elements) {
    if (v.cls == ElementClass::boundary || v.cls == ElementClass::divider) {
      EXPECT_LE(v.geometry.length(), w.piece_length + 1e-6);
    }
  }
  // Each boundary piece end is the start of exactly one other piece.
  std::vector<Point3> starts, ends;
  for (const auto& v : world.elements) {
    if (v.cls != ElementClass::boundary) continue;
    starts.push_back(v.geometry.points().front());
    ends.push_back(v.geometry.points().back());
  }
  for (const auto& e : ends) {
    EXPECT_EQ(std::count(starts.begin(), starts.end(), e), 1);
  }
}

TEST(World, CrossingsHitExactlyOneRoadSegment) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    WorldSpec w;
    w.seed = seed;
    w.crossing_density = 0.8;
    const World world = generate_world(w);
    int crossings = 0;
    for (const auto& v : world.elements) {
      if (v.cls != ElementClass::ped_crossing) continue;
      ++crossings;
      int hits = 0;
      for (const auto& r : world.road_segments) {
        bool hit = false;
        for (std::size_t k = 1; k < v.geometry.size() && !hit; ++k) {
          hit = segment_hits_open_rect(v.geometry[k - 1], v.geometry[k], r);
        }
        hits += hit ? 1 : 0;
      }
      EXPECT_EQ(hits, 1);
    }
    EXPECT_GT(crossings, 0);
  }
}

TEST(World, TrajectoryIsSmoothLoopOnTheRoad) {
  const World world = generate_world(WorldSpec{});
  ASSERT_GT(world.trajectory.size(), 100u);
  for (std::size_t k = 1; k < world.trajectory.size(); ++k) {
    const auto& a = world.trajectory[k - 1];
    const auto& b = world.trajectory[k];
    const double step = std::hypot(b.utm_e - a.utm_e, b.utm_n - a.utm_n);
    EXPECT_LE(step, world.spec.step + 1e-6);
    EXPECT_GT(step, 0.5 * world.spec.step);
    const double dyaw = std::abs(normalize_yaw(b.yaw - a.yaw));
    EXPECT_LE(dyaw, world.spec.step / world.spec.corner_radius + 1e-9);
    EXPECT_NO_THROW(validate(b));
  }
  // Heading agrees with the direction of travel.
  const auto& a = world.trajectory[3];
  const auto& b = world.trajectory[4];
  EXPECT_NEAR(std::atan2(b.utm_n - a.utm_n, b.utm_e - a.utm_e), a.yaw, 0.5);
}

TEST(Replay, ZeroNoiseAndFullDropout) {
  Rng rng(81);
  std::vector<MapVector> gt;
  for (std::uint64_t id = 1; id <= 50; ++id) {
    gt.push_back(MapVector{id, ElementClass::divider, random_polyline(rng, 0, 0), 1.0, Layer::static_map});
  }
  ReplaySpec clean;
  clean.detector_noise_sigma = 0;
  clean.detector_dropout = 0;
  EXPECT_EQ(replay_predict(gt, clean, rng), gt);
  ReplaySpec dropped;
  dropped.detector_dropout = 1;
  EXPECT_TRUE(replay_predict(gt, dropped, rng).empty());
}

TEST(Replay, FoldedNormalJitter) {
  Rng rng(82);
  const std::vector<MapVector> gt{make_vector(1, ElementClass::divider, {{0, 0, 0}, {1, 0, 0}})};
  ReplaySpec spec;
  spec.detector_dropout = 0;
  spec.detector_noise_sigma = 0.4;
  double total = 0.0;
  std::size_t n = 0;
  for (int k = 0; k < 50000; ++k) {
    const auto p = replay_predict(gt, spec, rng);
    for (std::size_t v = 0; v < 2; ++v) {
      total += planar_distance(p[0].geometry[v], gt[0].geometry[v]);
      ++n;
    }
  }
  // The planar jitter norm is Rayleigh(sigma) with mean sigma * sqrt(pi/2).
  EXPECT_NEAR(total / n, 0.4 * std::sqrt(std::numbers::pi / 2), 0.005);
}

TEST(Replay, ConfidenceDecreasesWithJitter) {
  Rng rng(83);
  const std::vector<MapVector> gt{make_vector(1, ElementClass::divider, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}})};
  ReplaySpec spec;
  spec.detector_dropout = 0;
  std::vector<std::pair<double, double>> samples;
  for (int k = 0; k < 500; ++k) {
    const auto p = replay_predict(gt, spec, rng)[0];
    double jitter = 0;
    for (std::size_t v = 0; v < 3; ++v) jitter += planar_distance(p.geometry[v], gt[0].geometry[v]);
    samples.emplace_back(jitter / 3, p.confidence);
    ASSERT_NEAR(p.confidence, std::exp(-(jitter / 3) / spec.confidence_sigma_ref), 1e-12);
  }
}

TEST(Coverage, Fractions) {
  int covered = 0;
  for (int i = -50; i < 50; ++i) {
    for (int j = -50; j < 50; ++j) covered += tile_covered(TileIndex{i, j}, 5, 0.3) ? 1 : 0;
  }
  EXPECT_NEAR(covered / 10000.0, 0.3, 0.02);
  EXPECT_TRUE(tile_covered(TileIndex{3, 4}, 1, 1.0));
  EXPECT_FALSE(tile_covered(TileIndex{3, 4}, 1, 0.0));
}

TEST(Episode, ColdStartWithoutMap) {
  const World world = generate_world(small_world());
  EpisodeConfig cfg;
  cfg.replay.map_coverage = 0.0;
  const RunReport r = run_episode(world, cfg);
  ASSERT_FALSE(r.frames.empty());
  EXPECT_EQ(r.static_vectors_ingested, 0u);
  EXPECT_EQ(r.frames[0].mode, Mode::non_prior);
  for (std::size_t k = 1; k < r.frames.size(); ++k) EXPECT_EQ(r.frames[k].mode, Mode::temporal_prior) << k;
}

TEST(Episode, FullCoverageAlwaysFusion) {
  const World world = generate_world(small_world());
  EpisodeConfig cfg;
  cfg.replay.map_coverage = 1.0;
  const RunReport r = run_episode(world, cfg);
  for (const auto& f : r.frames) EXPECT_EQ(f.mode, Mode::temporal_map_fusion);
  EXPECT_DOUBLE_EQ(r.map_prior_ap.map, 1.0);
}

TEST(Episode, ModesFollowAvailabilityPolicy) {
  const World world = generate_world(WorldSpec{});
  EpisodeConfig cfg;
  cfg.replay.map_coverage = 0.5;
  cfg.restart_frames = {40, 41, 150};
  const RunReport r = run_episode(world, cfg);
  bool saw_temporal = false, saw_fusion = false;
  for (const auto& f : r.frames) {
    ASSERT_EQ(f.mode, select_inference_mode(f.temporal_available, f.map_available));
    ASSERT_EQ(f.temporal_available, f.temporal_vectors > 0);
    ASSERT_EQ(f.map_available, f.map_vectors > 0);
    saw_temporal = saw_temporal || f.mode == Mode::temporal_prior;
    saw_fusion = saw_fusion || f.mode == Mode::temporal_map_fusion;
  }
  EXPECT_TRUE(saw_temporal);
  EXPECT_TRUE(saw_fusion);
  EXPECT_FALSE(r.frames[40].temporal_available);
}

TEST(Episode, ScriptedCoverage) {
  const World world = generate_world(small_world());
  EpisodeConfig cfg;
  // Only tiles with even i carry the map.
  cfg.coverage = [](const TileIndex& t) { return t.i % 2 == 0; };
  cfg.restart_frames = {0, 10};
  const RunReport r = run_episode(world, cfg);
  for (const auto& f : r.frames) ASSERT_EQ(f.mode, select_inference_mode(f.temporal_available, f.map_available));
  EXPECT_FALSE(r.frames[10].temporal_available);
}

TEST(Episode, DeterministicReport) {
  const World world = generate_world(small_world());
  EpisodeConfig cfg;
  cfg.replay.map_coverage = 0.5;
  EXPECT_EQ(format_run_report(run_episode(world, cfg)), format_run_report(run_episode(world, cfg)));
  cfg.policy = ModePolicy::sampled;
  const auto a = run_episode(world, cfg);
  EXPECT_EQ(format_run_report(a), format_run_report(run_episode(world, cfg)));
  for (const auto& f : a.frames) {
    EXPECT_GE(f.latency.retrieval_ms, 0.0);
    EXPECT_GE(f.latency.rasterization_ms, 0.0);
    EXPECT_GE(f.latency.refreshment_ms, 0.0);
  }
  const auto csv = format_timings_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(a.frames.size()) + 1);
}

TEST(Episode, PerfectMapPriorEqualsGroundTruthRaster) {
  const World world = generate_world(small_world());
  EpisodeConfig cfg;
  cfg.replay.detector_noise_sigma = 0.0;
  cfg.replay.detector_dropout = 0.0;
  cfg.retrieve.strict_3x3 = true;
  cfg.vertical_band = kNoVerticalFilter;
  const RunReport r = run_episode(world, cfg);
  GlobalMap gt_map(cfg.raster.range.long_side());
  gt_map.ingest_static(world.elements);
  for (std::size_t k = 0; k < world.trajectory.size(); ++k) {
    const auto& pose = world.trajectory[k];
    const auto gt = gt_map.retrieve(Layer::static_map, pose, cfg.raster.range, RetrieveOptions{true});
    const auto priors = assemble_priors(Mode::temporal_map_fusion, gt_map, pose, cfg.raster, kNoVerticalFilter,
                                        RetrieveOptions{true});
    ASSERT_EQ(priors.map, rasterize(gt, cfg.raster));
    ASSERT_EQ(r.frames[k].map_cells, priors.map.count());
  }
}

TEST(Episode, PerturbedStaticMapLowersMapPriorAp) {
  const World world = generate_world(small_world());
  EpisodeConfig clean;
  EpisodeConfig noisy;
  noisy.perturb = PerturbationSpec{};
  noisy.perturb->seed = 3;
  noisy.perturb_ops = {PerturbOp::inst_displacement};
  const auto a = run_episode(world, clean);
  const auto b = run_episode(world, noisy);
  EXPECT_LT(b.map_prior_ap.map, a.map_prior_ap.map);
}

TEST(Bench, EmptyAndSmallWorlds) {
  const auto rows = bench({1, 100}, 5, 1);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_GE(r.retrieval_ms, 0.0);
    EXPECT_LT(r.retrieval_ms, 1000.0);
  }
  EXPECT_NE(format_bench_table(rows).find("brute_force_ms"), std::string::npos);
  EXPECT_THROW(bench({10}, 0, 1), ConfigError);
}

TEST(ScenarioIo, WorldRoundTrip) {
  const World world = generate_world(small_world());
  const auto text = format_world(world);
  const World back = parse_world(text);
  EXPECT_EQ(format_world(back), text);
  EXPECT_EQ(back.elements, world.elements);
  EXPECT_EQ(back.trajectory, world.trajectory);
  EXPECT_THROW(parse_world("{}"), ParseError);
  EXPECT_THROW(parse_world("not json"), ParseError);
  const auto path = std::filesystem::temp_directory_path() / "priormap_world_test.json";
  save_world(world, path);
  EXPECT_EQ(load_world(path).elements, world.elements);
  std::filesystem::remove(path);
}

TEST(ScenarioIo, SimConfigRoundTrip) {
  SimConfig cfg;
  cfg.world.blocks = 4;
  cfg.episode.replay.map_coverage = 0.25;
  cfg.episode.policy = ModePolicy::sampled;
  cfg.episode.ratio = {0.2, 0.3, 0.5};
  cfg.episode.restart_frames = {3, 9};
  cfg.episode.vertical_band = kNoVerticalFilter;
  const auto text = format_sim_config(cfg);
  const SimConfig back = parse_sim_config(text);
  EXPECT_EQ(format_sim_config(back), text);
  EXPECT_EQ(back.episode.restart_frames, (std::set<int>{3, 9}));
  EXPECT_THROW(parse_sim_config("world.colour = 3\n"), ConfigError);
  EXPECT_THROW(parse_sim_config("replay.map_coverage = 2\n"), ConfigError);
  EXPECT_THROW(parse_sim_config("ratio = 1,2\n"), ParseError);
}
