#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "priormap/evaluation.hpp"
#include "priormap/geometry.hpp"
#include "priormap/map_vector.hpp"
#include "priormap/perturbation.hpp"
#include "priormap/prior_assembly.hpp"
#include "priormap/random.hpp"
#include "priormap/tile_store.hpp"

namespace priormap {

// Synthetic city: a blocks x blocks grid of square blocks separated by
// two-lane roads. Road centre lines sit at multiples of block_size.
struct WorldSpec {
  std::uint64_t seed = 1;
  int blocks = 3;
  double block_size = 120.0;
  double lane_width = 3.5;
  // Probability of a pedestrian crossing on each road segment end.
  double crossing_density = 0.5;
  // Long dividers and boundaries are cut into pieces no longer than this;
  // 0 keeps them whole.
  double piece_length = 30.0;
  // Elevation gain per meter east.
  double grade = 0.002;
  double corner_radius = 6.0;
  // Spacing of trajectory poses along the route.
  double step = 5.0;
  // Number of poses; 0 means exactly one lap.
  int frames = 0;
};

void validate(const WorldSpec& spec);

// Axis-aligned rectangle in world coordinates.
struct Rect {
  double min_e, min_n, max_e, max_n;
};

struct World {
  WorldSpec spec;
  double origin_e = 0.0;
  double origin_n = 0.0;
  double origin_z = 0.0;
  std::vector<MapVector> elements;     // global frame
  std::vector<EgoPose> trajectory;
  std::vector<Rect> road_segments;     // road strips between intersections
};

// Deterministic per seed. The ego drives counterclockwise around the outer
// ring road in the right-hand lane with rounded corners.
World generate_world(const WorldSpec& spec);

struct ReplaySpec {
  std::uint64_t seed = 7;
  double detector_noise_sigma = 0.2;
  double detector_dropout = 0.1;
  // confidence = exp(-mean planar jitter / confidence_sigma_ref)
  double confidence_sigma_ref = 2.0;
  double frame_rate = 2.0;
  // Fraction of tiles carrying a static map.
  double map_coverage = 1.0;
};

void validate(const ReplaySpec& spec);

// Stand-in detector: drops each element with probability dropout, jitters
// every vertex in-plane with N(0, sigma^2) per axis, scores by jitter.
std::vector<MapVector> replay_predict(std::span<const MapVector> gt_ego, const ReplaySpec& spec,
                                      Rng& rng);

enum class ModePolicy { inference, sampled };

struct EpisodeConfig {
  ReplaySpec replay{};
  RefreshConfig refresh{};
  ModePolicy policy = ModePolicy::inference;
  ModeRatio ratio{};
  RasterConfig raster{};
  double vertical_band = kDefaultVerticalBand;
  RetrieveOptions retrieve{};
  // Tile side; 0 uses the long side of the raster range.
  double tile_side = 0.0;
  std::optional<PerturbationSpec> perturb;
  std::set<PerturbOp> perturb_ops;
  // Replaces the seeded per-tile coverage draw when set.
  std::function<bool(const TileIndex&)> coverage;
  // The temporal layer is wiped before these frames (system restart).
  std::set<int> restart_frames;
  bool evaluate_priors = true;
};

struct StageLatency {
  double retrieval_ms = 0.0;
  double rasterization_ms = 0.0;
  double refreshment_ms = 0.0;
};

struct FrameRecord {
  int index = 0;
  Mode mode = Mode::non_prior;
  bool temporal_available = false;
  bool map_available = false;
  std::size_t temporal_vectors = 0;
  std::size_t map_vectors = 0;
  std::size_t gt_vectors = 0;
  std::size_t predictions = 0;
  std::size_t stored = 0;
  std::size_t temporal_cells = 0;
  std::size_t map_cells = 0;
  StageLatency latency;
};

struct RunReport {
  std::vector<FrameRecord> frames;
  std::size_t static_vectors_ingested = 0;
  // Prior quality against the ground truth in range, pooled over frames.
  APReport temporal_prior_ap;
  APReport map_prior_ap;
  APReport prediction_ap;
};

// Whether a tile carries static map for a given seed and coverage fraction.
bool tile_covered(const TileIndex& tile, std::uint64_t seed, double coverage);

RunReport run_episode(const World& world, const EpisodeConfig& cfg);

// JSON record. Timings are wall-clock and excluded unless requested, so equal
// seeds give byte-identical records.
std::string format_run_report(const RunReport& report, bool include_timings = false);

// Per-frame latency table as CSV.
std::string format_timings_csv(const RunReport& report);

struct BenchRow {
  std::size_t world_vectors = 0;
  double retrieval_ms = 0.0;
  double rasterization_ms = 0.0;
  double refreshment_ms = 0.0;
  double brute_force_ms = 0.0;  // full scan of the same layer, for comparison
};

// Median per-stage latency over `frames` random poses on random worlds of
// each size (uniform vector density).
std::vector<BenchRow> bench(const std::vector<std::size_t>& sizes, int frames, std::uint64_t seed);
std::string format_bench_table(const std::vector<BenchRow>& rows);

// Random world of `count` short polylines at constant density, plus poses
// inside it. Used by bench and the latency tests.
struct RandomWorld {
  GlobalMap map;
  std::vector<MapVector> vectors;
  double side = 0.0;
  double origin_e = 0.0;
  double origin_n = 0.0;
};
RandomWorld random_world(std::size_t count, double tile_side, Rng& rng);
EgoPose random_pose_in(const RandomWorld& world, Rng& rng);

}  // namespace priormap
