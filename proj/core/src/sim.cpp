#include "priormap/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "priormap/errors.hpp"

namespace priormap {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Splits a polyline into `pieces` parts of equal arc length. Original
// vertices are kept; cut points are interpolated.
std::vector<std::vector<Point3>> split_even(const std::vector<Point3>& pts, int pieces) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t k = 1; k < pts.size(); ++k) cum[k] = cum[k - 1] + distance3(pts[k - 1], pts[k]);
  const double total = cum.back();

  auto at = [&](double s, std::size_t seg) {
    const Point3& a = pts[seg - 1];
    const Point3& b = pts[seg];
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    return Point3{a.e + t * (b.e - a.e), a.n + t * (b.n - a.n), a.z + t * (b.z - a.z)};
  };

  std::vector<std::vector<Point3>> out;
  std::size_t seg = 1;
  Point3 start = pts.front();
  for (int p = 1; p <= pieces; ++p) {
    std::vector<Point3> piece{start};
    const bool last = p == pieces;
    const double end_s = total * p / pieces;
    while (seg < pts.size() && (last || cum[seg] < end_s)) {
      if (!(piece.back() == pts[seg])) piece.push_back(pts[seg]);
      ++seg;
    }
    if (!last) {
      const Point3 cut = at(end_s, seg);
      if (!(piece.back() == cut)) piece.push_back(cut);
      start = cut;
    }
    if (piece.size() >= 2) out.push_back(std::move(piece));
  }
  return out;
}

class WorldBuilder {
 public:
  WorldBuilder(World& world) : world_(world) {}

  Point3 at(double x, double y) const {
    return {world_.origin_e + x, world_.origin_n + y, world_.origin_z + world_.spec.grade * x};
  }

  void add(ElementClass cls, const std::vector<std::pair<double, double>>& local) {
    std::vector<Point3> pts;
    for (auto [x, y] : local) pts.push_back(at(x, y));
    double length = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) length += distance3(pts[k - 1], pts[k]);
    int pieces = 1;
    if (world_.spec.piece_length > 0.0) {
      pieces = std::max(1, static_cast<int>(std::ceil(length / world_.spec.piece_length - 1e-9)));
    }
    for (auto& piece : split_even(pts, pieces)) {
      world_.elements.push_back(MapVector{next_id_++, cls, Polyline3(std::move(piece)), 1.0, Layer::static_map});
    }
  }

 private:
  World& world_;
  std::uint64_t next_id_ = 1;
};

// Rounded-rectangle loop sampled by arc length.
class RingRoute {
 public:
  RingRoute(double x0, double y0, double x1, double y1, double radius)
      : x0_(x0), y0_(y0), x1_(x1), y1_(y1), r_(radius) {
    w_ = (x1 - x0) - 2 * r_;
    h_ = (y1 - y0) - 2 * r_;
    arc_ = 0.5 * std::numbers::pi * r_;
  }

  double length() const { return 2 * w_ + 2 * h_ + 4 * arc_; }

  // Local (x, y, yaw) at arc length s.
  std::array<double, 3> at(double s) const {
    s = std::fmod(s, length());
    constexpr double pi = std::numbers::pi;
    const double legs[4] = {w_, h_, w_, h_};
    // Straight headings and the arc centres that follow each straight.
    const double heading[4] = {0.0, pi / 2, pi, -pi / 2};
    const double cx[4] = {x1_ - r_, x1_ - r_, x0_ + r_, x0_ + r_};
    const double cy[4] = {y0_ + r_, y1_ - r_, y1_ - r_, y0_ + r_};
    const double start_x[4] = {x0_ + r_, x1_, x1_ - r_, x0_};
    const double start_y[4] = {y0_, y0_ + r_, y1_, y1_ - r_};
    for (int k = 0; k < 4; ++k) {
      if (s <= legs[k]) {
        return {start_x[k] + s * std::cos(heading[k]), start_y[k] + s * std::sin(heading[k]),
                heading[k]};
      }
      s -= legs[k];
      if (s <= arc_) {
        const double angle = heading[k] - pi / 2 + s / r_;
        return {cx[k] + r_ * std::cos(angle), cy[k] + r_ * std::sin(angle), angle + pi / 2};
      }
      s -= arc_;
    }
    return {start_x[0], start_y[0], 0.0};
  }

 private:
  double x0_, y0_, x1_, y1_, r_;
  double w_, h_, arc_;
};

}  // namespace

void validate(const WorldSpec& spec) {
  if (spec.blocks < 1) throw ConfigError("world needs at least one block");
  if (!(spec.lane_width > 0.0)) throw ConfigError("lane width must be > 0");
  if (!(spec.block_size > 2.0 * spec.lane_width + 8.0)) {
    throw ConfigError("block size must exceed two lane widths plus 8 m");
  }
  if (!(spec.crossing_density >= 0.0 && spec.crossing_density <= 1.0)) {
    throw ConfigError("crossing density must lie in [0, 1]");
  }
  if (!(spec.piece_length >= 0.0)) throw ConfigError("piece length must be >= 0");
  if (!(spec.step > 0.0)) throw ConfigError("trajectory step must be > 0");
  if (!(spec.corner_radius > 0.0) ||
      !(spec.corner_radius * 2.0 < spec.block_size * spec.blocks)) {
    throw ConfigError("corner radius must be > 0 and fit the ring road");
  }
  if (spec.frames < 0) throw ConfigError("frame count must be >= 0");
}

World generate_world(const WorldSpec& spec) {
  validate(spec);
  World world;
  world.spec = spec;
  Rng rng(spec.seed);
  world.origin_e = 500000.0 + std::floor(rng.uniform(0.0, 1000.0));
  world.origin_n = 4000000.0 + std::floor(rng.uniform(0.0, 1000.0));
  world.origin_z = std::floor(rng.uniform(0.0, 50.0));

  const double b = spec.block_size;
  const double w = spec.lane_width;
  const double extent = b * spec.blocks;
  WorldBuilder builder(world);

  // Road segments, their dividers and crossings. Vertical roads first.
  for (int axis = 0; axis < 2; ++axis) {
    for (int k = 0; k <= spec.blocks; ++k) {
      for (int j = 0; j < spec.blocks; ++j) {
        const double c = k * b;
        const double lo = j * b + w;
        const double hi = (j + 1) * b - w;
        auto pt = [&](double across, double along) {
          return axis == 0 ? std::pair{across, along} : std::pair{along, across};
        };
        const auto p0 = pt(c - w, lo);
        const auto p1 = pt(c + w, hi);
        world.road_segments.push_back({world.origin_e + std::min(p0.first, p1.first),
                                       world.origin_n + std::min(p0.second, p1.second),
                                       world.origin_e + std::max(p0.first, p1.first),
                                       world.origin_n + std::max(p0.second, p1.second)});
        builder.add(ElementClass::divider, {pt(c, lo), pt(c, hi)});
        for (double along : {lo + 2.0, hi - 2.0}) {
          if (rng.bernoulli(spec.crossing_density)) {
            builder.add(ElementClass::ped_crossing, {pt(c - w + 0.25, along), pt(c + w - 0.25, along)});
          }
        }
      }
    }
  }

  // Kerbs: one closed loop per block plus the outer loop.
  for (int bi = 0; bi < spec.blocks; ++bi) {
    for (int bj = 0; bj < spec.blocks; ++bj) {
      const double x0 = bi * b + w, x1 = (bi + 1) * b - w;
      const double y0 = bj * b + w, y1 = (bj + 1) * b - w;
      builder.add(ElementClass::boundary, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}});
    }
  }
  builder.add(ElementClass::boundary,
              {{-w, -w}, {extent + w, -w}, {extent + w, extent + w}, {-w, extent + w}, {-w, -w}});

  // Right-hand lane of the ring road, counterclockwise.
  const RingRoute route(-w / 2, -w / 2, extent + w / 2, extent + w / 2, spec.corner_radius);
  const int frames = spec.frames > 0 ? spec.frames
                                     : static_cast<int>(std::floor(route.length() / spec.step));
  world.trajectory.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const auto [x, y, yaw] = route.at(f * spec.step);
    const Point3 p = builder.at(x, y);
    world.trajectory.push_back({p.e, p.n, p.z, normalize_yaw(yaw)});
  }
  return world;
}

void validate(const ReplaySpec& spec) {
  if (!(spec.detector_noise_sigma >= 0.0)) throw ConfigError("detector noise sigma must be >= 0");
  if (!(spec.detector_dropout >= 0.0 && spec.detector_dropout <= 1.0)) {
    throw ConfigError("detector dropout must lie in [0, 1]");
  }
  if (!(spec.confidence_sigma_ref > 0.0)) throw ConfigError("confidence sigma_ref must be > 0");
  if (!(spec.frame_rate > 0.0)) throw ConfigError("frame rate must be > 0");
  if (!(spec.map_coverage >= 0.0 && spec.map_coverage <= 1.0)) {
    throw ConfigError("map coverage must lie in [0, 1]");
  }
}

std::vector<MapVector> replay_predict(std::span<const MapVector> gt_ego, const ReplaySpec& spec,
                                      Rng& rng) {
  std::vector<MapVector> out;
  out.reserve(gt_ego.size());
  for (const auto& gt : gt_ego) {
    if (rng.bernoulli(spec.detector_dropout)) continue;
    if (spec.detector_noise_sigma == 0.0) {
      MapVector pred = gt;
      pred.confidence = 1.0;
      out.push_back(std::move(pred));
      continue;
    }
    std::vector<Point3> pts;
    pts.reserve(gt.geometry.size());
    double jitter = 0.0;
    for (const auto& p : gt.geometry.points()) {
      const double de = spec.detector_noise_sigma * rng.normal();
      const double dn = spec.detector_noise_sigma * rng.normal();
      jitter += std::hypot(de, dn);
      pts.push_back({p.e + de, p.n + dn, p.z});
    }
    jitter /= static_cast<double>(pts.size());
    out.push_back(MapVector{gt.id, gt.cls, Polyline3(std::move(pts)),
                            std::exp(-jitter / spec.confidence_sigma_ref), gt.layer});
  }
  return out;
}

bool tile_covered(const TileIndex& tile, std::uint64_t seed, double coverage) {
  if (coverage >= 1.0) return true;
  if (coverage <= 0.0) return false;
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tile.i) * 0x100000001B3ULL ^
                                                       splitmix64(static_cast<std::uint64_t>(tile.j))));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < coverage;
}

RunReport run_episode(const World& world, const EpisodeConfig& cfg) {
  validate(cfg.replay);
  validate(cfg.ratio);
  const double tile_side = cfg.tile_side > 0.0 ? cfg.tile_side : cfg.raster.range.long_side();
  const PerceptionRange& range = cfg.raster.range;

  GlobalMap map(tile_side);
  GlobalMap gt_map(tile_side);
  gt_map.ingest_static(world.elements);

  std::vector<MapVector> static_elements = world.elements;
  if (cfg.perturb && !cfg.perturb_ops.empty()) {
    // Frame-level operators act about an ego origin; use the world centre.
    const double half = 0.5 * world.spec.block_size * world.spec.blocks;
    const EgoPose pivot{world.origin_e + half, world.origin_n + half, world.origin_z, 0.0};
    std::vector<MapVector> local;
    local.reserve(static_elements.size());
    for (const auto& v : static_elements) {
      MapVector l = v;
      l.geometry = global_to_ego(v.geometry, pivot);
      local.push_back(std::move(l));
    }
    Rng prng(cfg.perturb->seed);
    const ElementPool pool{local};
    auto perturbed = apply_perturbations(local, pool, *cfg.perturb, cfg.perturb_ops, prng);
    static_elements.clear();
    for (auto& v : perturbed) {
      v.geometry = ego_to_global(v.geometry, pivot);
      static_elements.push_back(std::move(v));
    }
  }

  {
    GlobalMap staging(tile_side);
    staging.ingest_static(static_elements);
    for (const auto& [tile, bucket] : staging.tiles(Layer::static_map)) {
      const bool covered = cfg.coverage ? cfg.coverage(tile)
                                        : tile_covered(tile, cfg.replay.seed, cfg.replay.map_coverage);
      if (!covered) continue;
      for (const auto& v : bucket) map.insert(Layer::static_map, tile, *v);
    }
  }

  RunReport report;
  report.static_vectors_ingested = map.unique_vector_count(Layer::static_map);
  Rng detector_rng(cfg.replay.seed);
  Rng mode_rng(splitmix64(cfg.replay.seed));

  std::vector<EvalFrame> temporal_frames, map_frames, prediction_frames;
  const auto to_scored = [](const std::vector<MapVector>& vs) {
    std::vector<ScoredVector> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back({v, v.confidence});
    return out;
  };

  for (std::size_t f = 0; f < world.trajectory.size(); ++f) {
    if (cfg.restart_frames.contains(static_cast<int>(f))) map.clear(Layer::temporal);
    const EgoPose& pose = world.trajectory[f];
    FrameRecord rec;
    rec.index = static_cast<int>(f);

    const auto t0 = Clock::now();
    const auto temporal = map.retrieve(Layer::temporal, pose, range, cfg.retrieve);
    const auto statics = map.retrieve(Layer::static_map, pose, range, cfg.retrieve);
    const auto t1 = Clock::now();

    rec.temporal_available = !temporal.empty();
    rec.map_available = !statics.empty();
    rec.mode = cfg.policy == ModePolicy::inference
                   ? select_inference_mode(rec.temporal_available, rec.map_available)
                   : sample_mode(cfg.ratio, mode_rng);
    const PriorHeatmaps priors =
        assemble_from_vectors(rec.mode, temporal, statics, cfg.raster, cfg.vertical_band);
    const auto t2 = Clock::now();

    const auto gt = gt_map.retrieve(Layer::static_map, pose, range, RetrieveOptions{true});
    const auto preds = replay_predict(gt, cfg.replay, detector_rng);

    const auto t3 = Clock::now();
    rec.stored = map.refresh(preds, pose, cfg.refresh);
    const auto t4 = Clock::now();

    rec.temporal_vectors = temporal.size();
    rec.map_vectors = statics.size();
    rec.gt_vectors = gt.size();
    rec.predictions = preds.size();
    rec.temporal_cells = priors.temporal.count();
    rec.map_cells = priors.map.count();
    rec.latency = {elapsed_ms(t0, t1), elapsed_ms(t1, t2), elapsed_ms(t3, t4)};
    report.frames.push_back(rec);

    if (cfg.evaluate_priors) {
      temporal_frames.push_back({to_scored(temporal), gt});
      map_frames.push_back({to_scored(statics), gt});
      prediction_frames.push_back({to_scored(preds), gt});
    }
  }

  if (cfg.evaluate_priors) {
    report.temporal_prior_ap = evaluate(temporal_frames);
    report.map_prior_ap = evaluate(map_frames);
    report.prediction_ap = evaluate(prediction_frames);
  }
  return report;
}

namespace {

nlohmann::ordered_json report_json(const APReport& r) {
  nlohmann::ordered_json j;
  j["thresholds"] = r.thresholds;
  for (const auto& row : r.classes) {
    j["classes"][std::string(to_string(row.cls))] = {
        {"ap", row.ap}, {"mean_ap", row.mean_ap}, {"defined", row.defined}, {"num_gt", row.num_gt},
        {"num_pred", row.num_pred}};
  }
  j["mAP"] = r.map;
  return j;
}

}  // namespace

std::string format_run_report(const RunReport& report, bool include_timings) {
  nlohmann::ordered_json j;
  j["format"] = "priormap-run-report";
  j["version"] = 1;
  j["frame_count"] = report.frames.size();
  j["static_vectors_ingested"] = report.static_vectors_ingested;
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& f : report.frames) ++counts[static_cast<int>(f.mode)];
  j["mode_counts"] = {{"non_prior", counts[0]},
                      {"temporal_prior", counts[1]},
                      {"temporal_map_fusion", counts[2]}};
  j["frames"] = nlohmann::ordered_json::array();
  for (const auto& f : report.frames) {
    nlohmann::ordered_json fr;
    fr["index"] = f.index;
    fr["mode"] = std::string(to_string(f.mode));
    fr["temporal_available"] = f.temporal_available;
    fr["map_available"] = f.map_available;
    fr["temporal_vectors"] = f.temporal_vectors;
    fr["map_vectors"] = f.map_vectors;
    fr["gt_vectors"] = f.gt_vectors;
    fr["predictions"] = f.predictions;
    fr["stored"] = f.stored;
    fr["temporal_cells"] = f.temporal_cells;
    fr["map_cells"] = f.map_cells;
    if (include_timings) {
      fr["latency_ms"] = {{"retrieval", f.latency.retrieval_ms},
                          {"rasterization", f.latency.rasterization_ms},
                          {"refreshment", f.latency.refreshment_ms}};
    }
    j["frames"].push_back(fr);
  }
  j["temporal_prior_ap"] = report_json(report.temporal_prior_ap);
  j["map_prior_ap"] = report_json(report.map_prior_ap);
  j["prediction_ap"] = report_json(report.prediction_ap);
  return j.dump(2) + "\n";
}

std::string format_timings_csv(const RunReport& report) {
  std::string out = "frame,mode,retrieval_ms,rasterization_ms,refreshment_ms\n";
  char buf[160];
  for (const auto& f : report.frames) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.6f,%.6f,%.6f\n", f.index,
                  std::string(to_string(f.mode)).c_str(), f.latency.retrieval_ms,
                  f.latency.rasterization_ms, f.latency.refreshment_ms);
    out += buf;
  }
  return out;
}

RandomWorld random_world(std::size_t count, double tile_side, Rng& rng) {
  // About one element per 100 m^2, similar to a dense urban HD map.
  const double side = std::max(100.0, std::sqrt(static_cast<double>(count) * 100.0));
  RandomWorld world{GlobalMap(tile_side), {}, side, 500000.0, 4000000.0};
  world.vectors.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double e0 = world.origin_e + rng.uniform(0.0, side);
    const double n0 = world.origin_n + rng.uniform(0.0, side);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const auto npts = static_cast<int>(rng.uniform_int(2, 6));
    std::vector<Point3> pts;
    double e = e0, n = n0;
    for (int p = 0; p < npts; ++p) {
      pts.push_back({e, n, rng.uniform(-0.5, 0.5)});
      const double step = rng.uniform(2.0, 6.0);
      const double turn = heading + rng.uniform(-0.3, 0.3);
      e += step * std::cos(turn);
      n += step * std::sin(turn);
    }
    const auto cls = static_cast<ElementClass>(rng.uniform_int(0, 2));
    world.vectors.push_back(MapVector{k + 1, cls, Polyline3(std::move(pts)), 1.0, Layer::static_map});
  }
  world.map.ingest_static(world.vectors);
  return world;
}

EgoPose random_pose_in(const RandomWorld& world, Rng& rng) {
  return {world.origin_e + rng.uniform(0.0, world.side), world.origin_n + rng.uniform(0.0, world.side),
          0.0, rng.uniform(-std::numbers::pi, std::numbers::pi)};
}

namespace {

std::vector<MapVector> brute_force_scan(const GlobalMap& map, Layer layer, const EgoPose& pose,
                                        const PerceptionRange& range) {
  std::vector<MapVector> out;
  for (const auto& [tile, bucket] : map.tiles(layer)) {
    for (const auto& v : bucket) {
      Polyline3 local = global_to_ego(v->geometry, pose);
      if (intersects_range(local, range)) out.push_back(MapVector{v->id, v->cls, std::move(local), v->confidence, layer});
    }
  }
  return out;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace

std::vector<BenchRow> bench(const std::vector<std::size_t>& sizes, int frames, std::uint64_t seed) {
  if (frames < 1) throw ConfigError("bench needs at least one frame");
  const RasterConfig raster{};
  const PerceptionRange& range = raster.range;
  std::vector<BenchRow> rows;
  for (std::size_t size : sizes) {
    Rng rng(seed ^ splitmix64(size));
    RandomWorld world = random_world(size, range.long_side(), rng);
    // Populate the temporal layer with the same density as the static one.
    std::vector<double> retrieval, raster_ms, refresh_ms, brute;
    for (int f = 0; f < frames; ++f) {
      const EgoPose pose = random_pose_in(world, rng);
      const auto t0 = Clock::now();
      const auto temporal = world.map.retrieve(Layer::temporal, pose, range);
      const auto statics = world.map.retrieve(Layer::static_map, pose, range);
      const auto t1 = Clock::now();
      const auto priors =
          assemble_from_vectors(Mode::temporal_map_fusion, temporal, statics, raster, kDefaultVerticalBand);
      const auto t2 = Clock::now();
      std::vector<MapVector> preds = statics;
      for (auto& p : preds) p.confidence = 0.9;
      const auto t3 = Clock::now();
      world.map.refresh(preds, pose, RefreshConfig{0.8});
      const auto t4 = Clock::now();
      const auto scanned = brute_force_scan(world.map, Layer::static_map, pose, range);
      const auto t5 = Clock::now();
      retrieval.push_back(elapsed_ms(t0, t1));
      raster_ms.push_back(elapsed_ms(t1, t2));
      refresh_ms.push_back(elapsed_ms(t3, t4));
      brute.push_back(elapsed_ms(t4, t5));
      if (priors.map.shape().rows == 0 || scanned.size() < statics.size()) {
        throw std::logic_error("bench sanity check failed");
      }
    }
    rows.push_back({size, median(retrieval), median(raster_ms), median(refresh_ms), median(brute)});
  }
  return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::string out =
      "vectors    retrieval_ms  rasterization_ms  refreshment_ms  brute_force_ms\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-10zu %12.4f %17.4f %15.4f %15.4f\n", r.world_vectors,
                  r.retrieval_ms, r.rasterization_ms, r.refreshment_ms, r.brute_force_ms);
    out += buf;
  }
  return out;
}

}  // namespace priormap
