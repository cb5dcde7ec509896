#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include <priormap/errors.hpp>
#include <priormap/evaluation.hpp>
#include <priormap/heatmap_io.hpp>
#include <priormap/map_file.hpp>
#include <priormap/perturbation.hpp>
#include <priormap/prior_assembly.hpp>
#include <priormap/scenario_io.hpp>
#include <priormap/sim.hpp>
#include <priormap/tile_store.hpp>
#include <priormap/vector_file.hpp>

#include "plot.hpp"

namespace priormap::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutDirEnv = "PRIORMAP_OUT_DIR";

// Bad flag value detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& flag, const std::string& what)
      : std::runtime_error(flag + ": " + what) {}
};

std::vector<double> parse_numbers(const std::string& flag, const std::string& text, std::size_t want) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw UsageError(flag, "'" + part + "' is not a number");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (want != 0 && out.size() != want) {
    throw UsageError(flag, "expected " + std::to_string(want) + " comma-separated values");
  }
  return out;
}

EgoPose parse_pose(const std::string& text) {
  const auto v = parse_numbers("--pose", text, 4);
  EgoPose pose{v[0], v[1], v[2], v[3]};
  try {
    validate(pose);
  } catch (const std::exception& e) {
    throw UsageError("--pose", e.what());
  }
  return pose;
}

PerceptionRange parse_range(const std::string& text) {
  const auto v = parse_numbers("--range", text, 4);
  PerceptionRange range{v[0], v[1], v[2], v[3]};
  try {
    validate(range);
  } catch (const std::exception& e) {
    throw UsageError("--range", e.what());
  }
  return range;
}

ModeRatio parse_ratio(const std::string& text) {
  const auto v = parse_numbers("--ratio", text, 3);
  ModeRatio ratio{v[0], v[1], v[2]};
  try {
    validate(ratio);
  } catch (const std::exception& e) {
    throw UsageError("--ratio", e.what());
  }
  return ratio;
}

Layer parse_layer_flag(const std::string& text) {
  const auto layer = parse_layer(text);
  if (!layer) throw UsageError("--layer", "expected static or temporal, got '" + text + "'");
  return *layer;
}

std::set<PerturbOp> parse_ops_flag(const std::string& text) {
  try {
    auto ops = parse_perturb_ops(text);
    if (ops.empty()) throw UsageError("--ops", "at least one operator is required");
    return ops;
  } catch (const ConfigError& e) {
    throw UsageError("--ops", e.what());
  }
}

std::vector<double> parse_thresholds(const std::string& text) {
  if (text == "standard") return kStandardThresholds;
  if (text == "extended") return kExtendedThresholds;
  auto v = parse_numbers("--thresholds", text, 0);
  for (double t : v) {
    if (!(t > 0.0)) throw UsageError("--thresholds", "thresholds must be > 0");
  }
  return v;
}

RasterConfig raster_config(const std::string& range, double cell, int halfwidth) {
  RasterConfig cfg;
  if (!range.empty()) cfg.range = parse_range(range);
  cfg.cell = cell;
  cfg.line_halfwidth = halfwidth;
  try {
    (void)grid_shape(cfg);
  } catch (const std::exception& e) {
    throw UsageError("--cell", e.what());
  }
  return cfg;
}

fs::path out_dir(const std::string& flag) {
  fs::path dir;
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
    dir = env;
  } else {
    dir = ".";
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

// One entry per distinct id of the static layer, in id order.
std::vector<MapVector> static_vectors(const GlobalMap& map) {
  std::map<std::uint64_t, MapVector> unique;
  for (const auto& [tile, bucket] : map.tiles(Layer::static_map)) {
    for (const auto& v : bucket) unique.emplace(v->id, *v);
  }
  std::vector<MapVector> out;
  out.reserve(unique.size());
  for (auto& [id, v] : unique) out.push_back(std::move(v));
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed (overrides any seed in spec files)");
  cmd->add_option("--out", c.out,
                  std::string("Output directory (default: $") + kOutDirEnv + " or the working directory)");
}

// ---- subcommands ---------------------------------------------------------

struct IngestArgs {
  Common common;
  std::string vectors;
  std::string map;
  double tile_side = 60.0;
};

int do_ingest(const IngestArgs& a, std::ostream& out) {
  const auto vectors = read_vectors(a.vectors, Layer::static_map);
  GlobalMap map = a.map.empty() ? GlobalMap(a.tile_side) : load_map(a.map);
  map.ingest_static(vectors);
  const fs::path path = out_dir(a.common.out) / "map.pmap";
  save_map(map, path);
  out << "ingested " << vectors.size() << " vectors into " << map.tile_count(Layer::static_map)
      << " tiles -> " << path.string() << '\n';
  return 0;
}

struct PerturbArgs {
  Common common;
  std::string map;
  std::string spec;
  std::string ops;
  std::string pose;
};

int do_perturb(const PerturbArgs& a, std::ostream& out) {
  const auto ops = parse_ops_flag(a.ops);
  PerturbationSpec spec = a.spec.empty() ? PerturbationSpec{} : parse_perturbation_spec(read_text(a.spec));
  if (a.common.seed_set) spec.seed = a.common.seed;

  const GlobalMap map = load_map(a.map);
  const auto before = static_vectors(map);
  if (before.empty()) throw IoError("map has no static vectors to perturb");

  EgoPose pivot{0.0, 0.0, 0.0, 0.0};
  if (!a.pose.empty()) {
    pivot = parse_pose(a.pose);
  } else {
    // Centre of the static layer's extent, heading east.
    Bounds2 box = bounds(before.front().geometry);
    for (const auto& v : before) {
      const Bounds2 b = bounds(v.geometry);
      box = {std::min(box.min_e, b.min_e), std::min(box.min_n, b.min_n),
             std::max(box.max_e, b.max_e), std::max(box.max_n, b.max_n)};
    }
    pivot.utm_e = 0.5 * (box.min_e + box.max_e);
    pivot.utm_n = 0.5 * (box.min_n + box.max_n);
  }

  std::vector<MapVector> local;
  local.reserve(before.size());
  for (const auto& v : before) {
    MapVector l = v;
    l.geometry = global_to_ego(v.geometry, pivot);
    local.push_back(std::move(l));
  }
  Rng rng(spec.seed);
  const ElementPool pool{local};
  auto perturbed = apply_perturbations(local, pool, spec, ops, rng);
  for (auto& v : perturbed) v.geometry = ego_to_global(v.geometry, pivot);

  GlobalMap result(map.tile_side());
  for (const auto& [tile, bucket] : map.tiles(Layer::temporal)) {
    for (const auto& v : bucket) result.insert(Layer::temporal, tile, *v);
  }
  result.ingest_static(perturbed);

  const fs::path dir = out_dir(a.common.out);
  save_map(result, dir / "perturbed.pmap");
  write_text(dir / "perturb_spec.txt", format_perturbation_spec(spec));
  const auto image = render_before_after(before, perturbed);
  write_file_bytes(dir / "perturb_before_after.ppm", encode_ppm(image));
  out << "perturbed " << before.size() << " -> " << perturbed.size() << " vectors (ops:";
  for (auto op : ops) out << ' ' << to_string(op);
  out << ", seed " << spec.seed << ") -> " << (dir / "perturbed.pmap").string() << '\n';
  return 0;
}

struct RetrieveArgs {
  Common common;
  std::string map;
  std::string pose;
  std::string layer = "static";
  std::string range;
  bool strict = false;
};

int do_retrieve(const RetrieveArgs& a, std::ostream& out) {
  const EgoPose pose = parse_pose(a.pose);
  const Layer layer = parse_layer_flag(a.layer);
  const PerceptionRange range = a.range.empty() ? PerceptionRange{} : parse_range(a.range);
  const GlobalMap map = load_map(a.map);
  const auto vectors = map.retrieve(layer, pose, range, RetrieveOptions{a.strict});
  const fs::path path = out_dir(a.common.out) / "retrieved.txt";
  write_vectors(path, vectors);
  out << "retrieved " << vectors.size() << " vectors -> " << path.string() << '\n';
  return 0;
}

struct RasterizeArgs {
  Common common;
  std::string vectors;
  std::string map;
  std::string pose;
  std::string layer = "static";
  std::string range;
  double cell = 0.3;
  int halfwidth = 0;
  bool strict = false;
};

int do_rasterize(const RasterizeArgs& a, std::ostream& out) {
  const RasterConfig cfg = raster_config(a.range, a.cell, a.halfwidth);
  if (a.vectors.empty() == a.map.empty()) throw UsageError("--vectors", "give either --vectors or --map");
  if (!a.map.empty() && a.pose.empty()) throw UsageError("--pose", "required with --map");
  std::vector<MapVector> vectors;
  if (!a.vectors.empty()) {
    vectors = read_vectors(a.vectors);
  } else {
    const EgoPose pose = parse_pose(a.pose);
    const Layer layer = parse_layer_flag(a.layer);
    vectors = load_map(a.map).retrieve(layer, pose, cfg.range, RetrieveOptions{a.strict});
  }
  const Heatmap grid = rasterize(vectors, cfg);
  const auto paths = write_heatmap_files(grid, out_dir(a.common.out) / "heatmap");
  const GridShape s = grid.shape();
  out << "rasterized " << vectors.size() << " vectors into " << s.channels << 'x' << s.rows << 'x'
      << s.cols << " (" << grid.count() << " cells set)\n";
  for (const auto& p : paths) out << "  " << p.string() << '\n';
  return 0;
}

struct SimArgs {
  Common common;
  std::string spec;
  std::string perturb_spec;
  std::string ops;
  std::string ratio;
  std::string range;
  std::string policy;
  double coverage = -1.0;
  double tau = -1.0;
  double cell = 0.3;
  int frames = -1;
  bool strict = false;
};

int do_sim(const SimArgs& a, std::ostream& out) {
  SimConfig cfg = a.spec.empty() ? SimConfig{} : parse_sim_config(read_text(a.spec));
  EpisodeConfig& ep = cfg.episode;
  if (a.common.seed_set) {
    cfg.world.seed = a.common.seed;
    ep.replay.seed = a.common.seed;
  }
  if (a.coverage >= 0.0) ep.replay.map_coverage = a.coverage;
  if (a.tau >= 0.0) ep.refresh.tau = a.tau;
  if (!a.ratio.empty()) ep.ratio = parse_ratio(a.ratio);
  if (!a.policy.empty()) ep.policy = a.policy == "sampled" ? ModePolicy::sampled : ModePolicy::inference;
  if (a.frames >= 0) cfg.world.frames = a.frames;
  if (a.strict) ep.retrieve.strict_3x3 = true;
  ep.raster = raster_config(a.range, a.cell, 0);
  if (!a.perturb_spec.empty() || !a.ops.empty()) {
    if (a.ops.empty()) throw UsageError("--ops", "required with --perturb-spec");
    ep.perturb_ops = parse_ops_flag(a.ops);
    ep.perturb = a.perturb_spec.empty() ? PerturbationSpec{}
                                        : parse_perturbation_spec(read_text(a.perturb_spec));
    if (a.common.seed_set) ep.perturb->seed = a.common.seed;
  }

  const World world = generate_world(cfg.world);
  const RunReport report = run_episode(world, ep);

  const fs::path dir = out_dir(a.common.out);
  write_text(dir / "run_report.json", format_run_report(report));
  write_text(dir / "timings.csv", format_timings_csv(report));
  write_text(dir / "sim_config.txt", format_sim_config(cfg));
  save_world(world, dir / "world.json");

  std::size_t counts[3] = {0, 0, 0};
  for (const auto& f : report.frames) ++counts[static_cast<int>(f.mode)];
  out << "frames " << report.frames.size() << ", static vectors " << report.static_vectors_ingested
      << '\n'
      << "modes: non_prior " << counts[0] << ", temporal_prior " << counts[1]
      << ", temporal_map_fusion " << counts[2] << '\n';
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mAP: predictions %.3f, temporal prior %.3f, map prior %.3f\n",
                report.prediction_ap.map, report.temporal_prior_ap.map, report.map_prior_ap.map);
  out << buf << "report -> " << (dir / "run_report.json").string() << '\n';
  return 0;
}

struct EvalArgs {
  Common common;
  std::string pred;
  std::string gt;
  std::string thresholds = "standard";
  bool full3d = false;
};

int do_eval(const EvalArgs& a, std::ostream& out) {
  const auto thresholds = parse_thresholds(a.thresholds);
  const auto preds = read_vectors(a.pred);
  const auto gts = read_vectors(a.gt);
  EvalOptions opts;
  opts.mode = a.full3d ? DistanceMode::full3d : DistanceMode::planar;
  const APReport report = evaluate(preds, gts, thresholds, opts);
  write_text(out_dir(a.common.out) / "eval_report.json", format_report_json(report));
  out << format_report_table(report);
  return 0;
}

struct BenchArgs {
  Common common;
  std::string sizes = "100,1000,10000,100000";
  int frames = 100;
};

int do_bench(const BenchArgs& a, std::ostream& out) {
  std::vector<std::size_t> sizes;
  for (double v : parse_numbers("--sizes", a.sizes, 0)) {
    if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("--sizes", "sizes must be positive integers");
    sizes.push_back(static_cast<std::size_t>(v));
  }
  const auto rows = bench(sizes, a.frames, a.common.seed_set ? a.common.seed : 1);
  const std::string table = format_bench_table(rows);
  write_text(out_dir(a.common.out) / "bench.txt", table);
  out << table;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tile-indexed prior-map engine: storage, perturbation, rasterization, evaluation and simulation.",
               "priormap"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Build a global map file from a vector file");
  add_common(c_ingest, ingest.common);
  c_ingest->add_option("--vectors", ingest.vectors, "Input vector file (global frame)")->required();
  c_ingest->add_option("--map", ingest.map, "Existing map file to extend");
  c_ingest->add_option("--tile-side", ingest.tile_side, "Tile side in meters for a new map")
      ->check(CLI::PositiveNumber);

  PerturbArgs perturb;
  auto* c_perturb = app.add_subcommand("perturb", "Corrupt the static layer of a map and plot before/after");
  add_common(c_perturb, perturb.common);
  c_perturb->add_option("--map", perturb.map, "Input map file")->required();
  c_perturb->add_option("--spec", perturb.spec, "Perturbation spec file (key = value)");
  c_perturb->add_option("--ops", perturb.ops,
                        "Comma-separated operators: inst_displacement, inst_addition, inst_deletion, "
                        "frame_displacement, frame_rotation, frame_scaling")
      ->required();
  c_perturb->add_option("--pose", perturb.pose, "Pivot pose e,n,z,yaw (default: centre of the map)");

  RetrieveArgs retrieve;
  auto* c_retrieve = app.add_subcommand("retrieve", "Fetch ego-frame vectors around a pose");
  add_common(c_retrieve, retrieve.common);
  c_retrieve->add_option("--map", retrieve.map, "Input map file")->required();
  c_retrieve->add_option("--pose", retrieve.pose, "Ego pose e,n,z,yaw (yaw in radians)")->required();
  c_retrieve->add_option("--layer", retrieve.layer, "static or temporal");
  c_retrieve->add_option("--range", retrieve.range, "Perception range front,rear,left,right in meters");
  c_retrieve->add_flag("--strict-3x3", retrieve.strict, "Query the full 3x3 tile block");

  RasterizeArgs raster;
  auto* c_raster = app.add_subcommand("rasterize", "Rasterize ego-frame vectors into BEV heatmaps");
  add_common(c_raster, raster.common);
  c_raster->add_option("--vectors", raster.vectors, "Input vector file (ego frame)");
  c_raster->add_option("--map", raster.map, "Map file to retrieve from instead of --vectors");
  c_raster->add_option("--pose", raster.pose, "Ego pose e,n,z,yaw, required with --map");
  c_raster->add_option("--layer", raster.layer, "static or temporal, with --map");
  c_raster->add_option("--range", raster.range, "Perception range front,rear,left,right in meters");
  c_raster->add_option("--cell", raster.cell, "Cell size in meters")->check(CLI::PositiveNumber);
  c_raster->add_option("--halfwidth", raster.halfwidth, "Extra cells painted on each side of a stroke (0 = 1-cell lines)")
      ->check(CLI::NonNegativeNumber);
  c_raster->add_flag("--strict-3x3", raster.strict, "Query the full 3x3 tile block, with --map");

  SimArgs sim;
  auto* c_sim = app.add_subcommand("sim", "Run a deterministic replay episode on a synthetic city");
  add_common(c_sim, sim.common);
  c_sim->add_option("--spec", sim.spec, "Simulation config file (key = value)");
  c_sim->add_option("--coverage", sim.coverage, "Fraction of tiles with a static map")
      ->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--tau", sim.tau, "Refresh confidence threshold")->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--policy", sim.policy, "Mode policy: inference or sampled")
      ->check(CLI::IsMember({"inference", "sampled"}));
  c_sim->add_option("--ratio", sim.ratio, "Sampled mode ratio N,T,F");
  c_sim->add_option("--range", sim.range, "Perception range front,rear,left,right in meters");
  c_sim->add_option("--cell", sim.cell, "Cell size in meters")->check(CLI::PositiveNumber);
  c_sim->add_option("--frames", sim.frames, "Number of frames (0 = one lap)")->check(CLI::NonNegativeNumber);
  c_sim->add_flag("--strict-3x3", sim.strict, "Query the full 3x3 tile block");
  c_sim->add_option("--perturb-spec", sim.perturb_spec, "Perturbation spec applied to the static map");
  c_sim->add_option("--ops", sim.ops, "Comma-separated perturbation operators for the static map");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Chamfer-distance AP of predictions against ground truth");
  add_common(c_eval, eval.common);
  c_eval->add_option("--pred", eval.pred, "Prediction vector file; confidence is the score")->required();
  c_eval->add_option("--gt", eval.gt, "Ground-truth vector file")->required();
  c_eval->add_option("--thresholds", eval.thresholds,
                     "standard (0.5,1,1.5), extended (1,1.5,2) or a comma-separated list");
  c_eval->add_flag("--3d", eval.full3d, "Use 3D instead of planar point distances");

  BenchArgs bench_args;
  auto* c_bench = app.add_subcommand("bench", "Median per-stage latency on random worlds");
  add_common(c_bench, bench_args.common);
  c_bench->add_option("--sizes", bench_args.sizes, "Comma-separated world sizes (vector counts)");
  c_bench->add_option("--frames", bench_args.frames, "Frames per size")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const auto seed_given = [](CLI::App* cmd) { return cmd->count("--seed") > 0; };

  try {
    if (c_ingest->parsed()) {
      ingest.common.seed_set = seed_given(c_ingest);
      return do_ingest(ingest, out);
    }
    if (c_perturb->parsed()) {
      perturb.common.seed_set = seed_given(c_perturb);
      return do_perturb(perturb, out);
    }
    if (c_retrieve->parsed()) return do_retrieve(retrieve, out);
    if (c_raster->parsed()) return do_rasterize(raster, out);
    if (c_sim->parsed()) {
      sim.common.seed_set = seed_given(c_sim);
      return do_sim(sim, out);
    }
    if (c_eval->parsed()) return do_eval(eval, out);
    if (c_bench->parsed()) {
      bench_args.common.seed_set = seed_given(c_bench);
      return do_bench(bench_args, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace priormap::cli
