#include "priormap/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "priormap/errors.hpp"
#include "priormap/map_file.hpp"
#include "priormap/vector_file.hpp"

namespace priormap {

using nlohmann::ordered_json;

std::string format_world(const World& world) {
  const WorldSpec& s = world.spec;
  ordered_json j;
  j["format"] = "priormap-world";
  j["version"] = 1;
  j["spec"] = {{"seed", s.seed},         {"blocks", s.blocks},
               {"block_size", s.block_size}, {"lane_width", s.lane_width},
               {"crossing_density", s.crossing_density}, {"piece_length", s.piece_length},
               {"grade", s.grade},       {"corner_radius", s.corner_radius},
               {"step", s.step},         {"frames", s.frames}};
  j["origin"] = {world.origin_e, world.origin_n, world.origin_z};
  j["elements"] = ordered_json::array();
  for (const auto& v : world.elements) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : v.geometry.points()) pts.push_back({p.e, p.n, p.z});
    j["elements"].push_back({{"id", v.id},
                             {"class", std::string(to_string(v.cls))},
                             {"confidence", v.confidence},
                             {"points", pts}});
  }
  j["trajectory"] = ordered_json::array();
  for (const auto& p : world.trajectory) j["trajectory"].push_back({p.utm_e, p.utm_n, p.z, p.yaw});
  j["road_segments"] = ordered_json::array();
  for (const auto& r : world.road_segments) {
    j["road_segments"].push_back({r.min_e, r.min_n, r.max_e, r.max_n});
  }
  return j.dump(1) + "\n";
}

World parse_world(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "priormap-world" || j.at("version") != 1) {
      throw ParseError("not a priormap world file (version 1)", 0);
    }
    World world;
    const auto& s = j.at("spec");
    world.spec.seed = s.at("seed").get<std::uint64_t>();
    world.spec.blocks = s.at("blocks").get<int>();
    world.spec.block_size = s.at("block_size").get<double>();
    world.spec.lane_width = s.at("lane_width").get<double>();
    world.spec.crossing_density = s.at("crossing_density").get<double>();
    world.spec.piece_length = s.at("piece_length").get<double>();
    world.spec.grade = s.at("grade").get<double>();
    world.spec.corner_radius = s.at("corner_radius").get<double>();
    world.spec.step = s.at("step").get<double>();
    world.spec.frames = s.at("frames").get<int>();
    const auto& o = j.at("origin");
    world.origin_e = o.at(0).get<double>();
    world.origin_n = o.at(1).get<double>();
    world.origin_z = o.at(2).get<double>();
    for (const auto& e : j.at("elements")) {
      const auto cls = parse_element_class(e.at("class").get<std::string>());
      if (!cls) throw ParseError("unknown element class", 0);
      std::vector<Point3> pts;
      for (const auto& p : e.at("points")) {
        pts.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
      }
      MapVector v{e.at("id").get<std::uint64_t>(), *cls, Polyline3(std::move(pts)),
                  e.at("confidence").get<double>(), Layer::static_map};
      validate(v);
      world.elements.push_back(std::move(v));
    }
    for (const auto& p : j.at("trajectory")) {
      EgoPose pose{p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
                   p.at(3).get<double>()};
      validate(pose);
      world.trajectory.push_back(pose);
    }
    for (const auto& r : j.at("road_segments")) {
      world.road_segments.push_back(
          {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>()});
    }
    return world;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("world file: ") + e.what(), 0);
  } catch (const GeometryError& e) {
    throw ParseError(std::string("world file: ") + e.what(), 0);
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& value, const std::string& key, std::size_t line) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("bad number '" + value + "' for " + key, line);
  }
  return v;
}

long long to_int(const std::string& value, const std::string& key, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("bad integer '" + value + "' for " + key, line);
  }
  return v;
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(std::string_view(value).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

SimConfig parse_sim_config(std::string_view text) {
  SimConfig cfg;
  WorldSpec& w = cfg.world;
  EpisodeConfig& ep = cfg.episode;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string body = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto num = [&] { return to_double(value, key, line); };
    const auto integer = [&] { return to_int(value, key, line); };

    if (key == "world.seed") w.seed = static_cast<std::uint64_t>(integer());
    else if (key == "world.blocks") w.blocks = static_cast<int>(integer());
    else if (key == "world.block_size") w.block_size = num();
    else if (key == "world.lane_width") w.lane_width = num();
    else if (key == "world.crossing_density") w.crossing_density = num();
    else if (key == "world.piece_length") w.piece_length = num();
    else if (key == "world.grade") w.grade = num();
    else if (key == "world.corner_radius") w.corner_radius = num();
    else if (key == "world.step") w.step = num();
    else if (key == "world.frames") w.frames = static_cast<int>(integer());
    else if (key == "replay.seed") ep.replay.seed = static_cast<std::uint64_t>(integer());
    else if (key == "replay.detector_noise_sigma") ep.replay.detector_noise_sigma = num();
    else if (key == "replay.detector_dropout") ep.replay.detector_dropout = num();
    else if (key == "replay.confidence_sigma_ref") ep.replay.confidence_sigma_ref = num();
    else if (key == "replay.frame_rate") ep.replay.frame_rate = num();
    else if (key == "replay.map_coverage") ep.replay.map_coverage = num();
    else if (key == "refresh.tau") ep.refresh.tau = num();
    else if (key == "tile_side") ep.tile_side = num();
    else if (key == "vertical_band") ep.vertical_band = num();
    else if (key == "policy") {
      if (value == "inference") ep.policy = ModePolicy::inference;
      else if (value == "sampled") ep.policy = ModePolicy::sampled;
      else throw ParseError("policy must be inference or sampled", line);
    } else if (key == "ratio") {
      const auto parts = split_commas(value);
      if (parts.size() != 3) throw ParseError("ratio needs three comma-separated values", line);
      ep.ratio = {to_double(parts[0], key, line), to_double(parts[1], key, line),
                  to_double(parts[2], key, line)};
    } else if (key == "strict_3x3") {
      if (value == "true") ep.retrieve.strict_3x3 = true;
      else if (value == "false") ep.retrieve.strict_3x3 = false;
      else throw ParseError("strict_3x3 must be true or false", line);
    } else if (key == "restart_frames") {
      ep.restart_frames.clear();
      if (!value.empty()) {
        for (const auto& part : split_commas(value)) ep.restart_frames.insert(static_cast<int>(to_int(part, key, line)));
      }
    } else {
      throw ConfigError("unknown sim config key '" + key + "' on line " + std::to_string(line));
    }
  }
  validate(w);
  validate(ep.replay);
  validate(ep.ratio);
  if (!(ep.refresh.tau >= 0.0 && ep.refresh.tau <= 1.0)) throw ConfigError("refresh.tau must lie in [0, 1]");
  if (!(ep.tile_side >= 0.0) || !std::isfinite(ep.tile_side)) throw ConfigError("tile_side must be >= 0");
  if (!(ep.vertical_band > 0.0)) throw ConfigError("vertical_band must be > 0");
  return cfg;
}

std::string format_sim_config(const SimConfig& cfg) {
  const WorldSpec& w = cfg.world;
  const EpisodeConfig& ep = cfg.episode;
  const auto d = [](double v) { return std::isinf(v) ? std::string("inf") : format_double(v); };
  std::ostringstream out;
  out << "world.seed = " << w.seed << '\n'
      << "world.blocks = " << w.blocks << '\n'
      << "world.block_size = " << d(w.block_size) << '\n'
      << "world.lane_width = " << d(w.lane_width) << '\n'
      << "world.crossing_density = " << d(w.crossing_density) << '\n'
      << "world.piece_length = " << d(w.piece_length) << '\n'
      << "world.grade = " << d(w.grade) << '\n'
      << "world.corner_radius = " << d(w.corner_radius) << '\n'
      << "world.step = " << d(w.step) << '\n'
      << "world.frames = " << w.frames << '\n'
      << "replay.seed = " << ep.replay.seed << '\n'
      << "replay.detector_noise_sigma = " << d(ep.replay.detector_noise_sigma) << '\n'
      << "replay.detector_dropout = " << d(ep.replay.detector_dropout) << '\n'
      << "replay.confidence_sigma_ref = " << d(ep.replay.confidence_sigma_ref) << '\n'
      << "replay.frame_rate = " << d(ep.replay.frame_rate) << '\n'
      << "replay.map_coverage = " << d(ep.replay.map_coverage) << '\n'
      << "refresh.tau = " << d(ep.refresh.tau) << '\n'
      << "policy = " << (ep.policy == ModePolicy::inference ? "inference" : "sampled") << '\n'
      << "ratio = " << d(ep.ratio.p_non) << ',' << d(ep.ratio.p_temporal) << ','
      << d(ep.ratio.p_fusion) << '\n'
      << "tile_side = " << d(ep.tile_side) << '\n'
      << "vertical_band = " << d(ep.vertical_band) << '\n'
      << "strict_3x3 = " << (ep.retrieve.strict_3x3 ? "true" : "false") << '\n'
      << "restart_frames = ";
  bool first = true;
  for (int f : ep.restart_frames) {
    out << (first ? "" : ",") << f;
    first = false;
  }
  out << '\n';
  return out.str();
}

void save_world(const World& world, const std::filesystem::path& path) {
  const std::string text = format_world(world);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

World load_world(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_world(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace priormap
