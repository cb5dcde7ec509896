#include "priormap/perturbation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

#include "priormap/errors.hpp"
#include "priormap/vector_file.hpp"

namespace priormap {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Polyline3 map_points(const Polyline3& poly, auto&& fn) {
  std::vector<Point3> pts;
  pts.reserve(poly.size());
  for (const auto& p : poly.points()) pts.push_back(fn(p));
  return Polyline3(std::move(pts));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void validate(const PerturbationSpec& spec) {
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be >= 0");
  };
  non_negative(spec.inst_disp_range, "inst_disp_range");
  non_negative(spec.frame_disp_range, "frame_disp_range");
  non_negative(spec.frame_rot_range, "frame_rot_range");
  if (!(spec.inst_select_prob >= 0.0 && spec.inst_select_prob <= 1.0)) {
    throw ConfigError("inst_select_prob must lie in [0, 1]");
  }
  if (spec.add_max < 0) throw ConfigError("add_max must be >= 0");
  if (spec.del_max < 0) throw ConfigError("del_max must be >= 0");
  if (!(spec.frame_scale_lo > 0.0) || !(spec.frame_scale_lo <= spec.frame_scale_hi) ||
      !std::isfinite(spec.frame_scale_hi)) {
    throw ConfigError("frame scale range needs 0 < lo <= hi");
  }
  validate(spec.placement_range);
}

PerturbationSpec parse_perturbation_spec(std::istream& in) {
  PerturbationSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));

    auto as_double = [&]() {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError("bad number '" + value + "' for " + key, line_no);
      }
      return v;
    };
    auto as_int = [&]() {
      long long v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError("bad integer '" + value + "' for " + key, line_no);
      }
      return v;
    };

    if (key == "seed") spec.seed = static_cast<std::uint64_t>(as_int());
    else if (key == "inst_disp_range") spec.inst_disp_range = as_double();
    else if (key == "inst_select_prob") spec.inst_select_prob = as_double();
    else if (key == "add_max") spec.add_max = static_cast<int>(as_int());
    else if (key == "del_max") spec.del_max = static_cast<int>(as_int());
    else if (key == "frame_disp_range") spec.frame_disp_range = as_double();
    else if (key == "frame_rot_range") spec.frame_rot_range = as_double();
    else if (key == "frame_scale_lo") spec.frame_scale_lo = as_double();
    else if (key == "frame_scale_hi") spec.frame_scale_hi = as_double();
    else if (key == "placement_front") spec.placement_range.front = as_double();
    else if (key == "placement_rear") spec.placement_range.rear = as_double();
    else if (key == "placement_left") spec.placement_range.left = as_double();
    else if (key == "placement_right") spec.placement_range.right = as_double();
    else throw ConfigError("unknown perturbation key '" + key + "' on line " + std::to_string(line_no));
  }
  validate(spec);
  return spec;
}

PerturbationSpec parse_perturbation_spec(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_perturbation_spec(in);
}

std::string format_perturbation_spec(const PerturbationSpec& spec) {
  std::ostringstream out;
  out << "seed = " << spec.seed << '\n'
      << "inst_disp_range = " << format_double(spec.inst_disp_range) << '\n'
      << "inst_select_prob = " << format_double(spec.inst_select_prob) << '\n'
      << "add_max = " << spec.add_max << '\n'
      << "del_max = " << spec.del_max << '\n'
      << "frame_disp_range = " << format_double(spec.frame_disp_range) << '\n'
      << "frame_rot_range = " << format_double(spec.frame_rot_range) << '\n'
      << "frame_scale_lo = " << format_double(spec.frame_scale_lo) << '\n'
      << "frame_scale_hi = " << format_double(spec.frame_scale_hi) << '\n'
      << "placement_front = " << format_double(spec.placement_range.front) << '\n'
      << "placement_rear = " << format_double(spec.placement_range.rear) << '\n'
      << "placement_left = " << format_double(spec.placement_range.left) << '\n'
      << "placement_right = " << format_double(spec.placement_range.right) << '\n';
  return out.str();
}

std::string_view to_string(PerturbOp op) {
  switch (op) {
    case PerturbOp::inst_displacement: return "inst_displacement";
    case PerturbOp::inst_addition: return "inst_addition";
    case PerturbOp::inst_deletion: return "inst_deletion";
    case PerturbOp::frame_displacement: return "frame_displacement";
    case PerturbOp::frame_rotation: return "frame_rotation";
    case PerturbOp::frame_scaling: return "frame_scaling";
  }
  return "unknown";
}

PerturbOp parse_perturb_op(std::string_view tag) {
  for (auto op : {PerturbOp::inst_displacement, PerturbOp::inst_addition, PerturbOp::inst_deletion,
                  PerturbOp::frame_displacement, PerturbOp::frame_rotation,
                  PerturbOp::frame_scaling}) {
    if (to_string(op) == tag) return op;
  }
  throw ConfigError("unknown perturbation tag '" + std::string(tag) + "'");
}

std::set<PerturbOp> parse_perturb_ops(std::string_view list) {
  std::set<PerturbOp> ops;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto end = comma == std::string_view::npos ? list.size() : comma;
    const std::string tag = trim(list.substr(start, end - start));
    if (!tag.empty()) ops.insert(parse_perturb_op(tag));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return ops;
}

MapVector translated(const MapVector& v, double de, double dn) {
  MapVector out = v;
  out.geometry = map_points(v.geometry, [&](const Point3& p) {
    return Point3{p.e + de, p.n + dn, p.z};
  });
  return out;
}

MapVector displaced(const MapVector& v, double magnitude, double heading) {
  return translated(v, magnitude * std::cos(heading), magnitude * std::sin(heading));
}

std::vector<MapVector> rotated_about_origin(std::span<const MapVector> vectors, double theta_rad) {
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  std::vector<MapVector> out(vectors.begin(), vectors.end());
  for (auto& v : out) {
    v.geometry = map_points(v.geometry, [&](const Point3& p) {
      return Point3{c * p.e - s * p.n, s * p.e + c * p.n, p.z};
    });
  }
  return out;
}

std::vector<MapVector> scaled_about_origin(std::span<const MapVector> vectors, double s) {
  std::vector<MapVector> out(vectors.begin(), vectors.end());
  for (auto& v : out) {
    v.geometry = map_points(v.geometry, [&](const Point3& p) {
      return Point3{s * p.e, s * p.n, p.z};
    });
  }
  return out;
}

double sample_frame_rotation_deg(const PerturbationSpec& spec, Rng& rng) {
  return rng.uniform(-spec.frame_rot_range, spec.frame_rot_range);
}

double sample_frame_scale(const PerturbationSpec& spec, Rng& rng) {
  return rng.uniform(spec.frame_scale_lo, spec.frame_scale_hi);
}

std::vector<MapVector> instance_displacement(std::span<const MapVector> vectors,
                                             const PerturbationSpec& spec, Rng& rng) {
  std::vector<MapVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (!rng.bernoulli(spec.inst_select_prob)) {
      out.push_back(v);
      continue;
    }
    const double magnitude = rng.uniform(0.0, spec.inst_disp_range);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(magnitude == 0.0 ? v : displaced(v, magnitude, heading));
  }
  return out;
}

std::vector<MapVector> instance_addition(std::span<const MapVector> vectors,
                                         const ElementPool& pool, const PerturbationSpec& spec,
                                         Rng& rng) {
  std::vector<MapVector> out(vectors.begin(), vectors.end());
  const auto n = rng.uniform_int(0, spec.add_max);
  if (n == 0) return out;
  if (pool.templates.empty()) throw ConfigError("instance addition drew elements from an empty pool");

  std::uint64_t next_id = 0;
  for (const auto& v : vectors) next_id = std::max(next_id, v.id + 1);

  const auto& range = spec.placement_range;
  for (std::int64_t k = 0; k < n; ++k) {
    const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(pool.templates.size()) - 1);
    const MapVector& tmpl = pool.templates[static_cast<std::size_t>(pick)];
    const double target_e = rng.uniform(-range.rear, range.front);
    const double target_n = rng.uniform(-range.right, range.left);
    const Bounds2 b = bounds(tmpl.geometry);
    MapVector added = translated(tmpl, target_e - 0.5 * (b.min_e + b.max_e),
                                 target_n - 0.5 * (b.min_n + b.max_n));
    added.id = next_id++;
    out.push_back(std::move(added));
  }
  return out;
}

std::vector<MapVector> instance_deletion(std::span<const MapVector> vectors,
                                         const PerturbationSpec& spec, Rng& rng) {
  const auto count = static_cast<std::int64_t>(vectors.size());
  const auto n = rng.uniform_int(0, std::min<std::int64_t>(spec.del_max, count));
  std::vector<std::size_t> order(vectors.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::vector<bool> removed(vectors.size(), false);
  // Partial Fisher-Yates: the first n slots become a uniform n-subset.
  for (std::int64_t k = 0; k < n; ++k) {
    const auto pick = rng.uniform_int(k, count - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
    removed[order[static_cast<std::size_t>(k)]] = true;
  }
  std::vector<MapVector> out;
  out.reserve(vectors.size() - static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (!removed[k]) out.push_back(vectors[k]);
  }
  return out;
}

std::vector<MapVector> frame_displacement(std::span<const MapVector> vectors,
                                          const PerturbationSpec& spec, Rng& rng) {
  const double de = rng.uniform(-spec.frame_disp_range, spec.frame_disp_range);
  const double dn = rng.uniform(-spec.frame_disp_range, spec.frame_disp_range);
  std::vector<MapVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(de == 0.0 && dn == 0.0 ? v : translated(v, de, dn));
  return out;
}

std::vector<MapVector> frame_rotation(std::span<const MapVector> vectors,
                                      const PerturbationSpec& spec, Rng& rng) {
  const double theta_deg = sample_frame_rotation_deg(spec, rng);
  if (theta_deg == 0.0) return {vectors.begin(), vectors.end()};
  return rotated_about_origin(vectors, theta_deg * kDegToRad);
}

std::vector<MapVector> frame_scaling(std::span<const MapVector> vectors,
                                     const PerturbationSpec& spec, Rng& rng) {
  const double s = sample_frame_scale(spec, rng);
  if (s == 1.0) return {vectors.begin(), vectors.end()};
  return scaled_about_origin(vectors, s);
}

std::vector<MapVector> apply_perturbations(std::span<const MapVector> vectors,
                                           const ElementPool& pool, const PerturbationSpec& spec,
                                           const std::set<PerturbOp>& ops, Rng& rng) {
  validate(spec);
  std::vector<MapVector> current(vectors.begin(), vectors.end());
  if (ops.contains(PerturbOp::inst_displacement)) current = instance_displacement(current, spec, rng);
  if (ops.contains(PerturbOp::inst_addition)) current = instance_addition(current, pool, spec, rng);
  if (ops.contains(PerturbOp::inst_deletion)) current = instance_deletion(current, spec, rng);
  if (ops.contains(PerturbOp::frame_displacement)) current = frame_displacement(current, spec, rng);
  if (ops.contains(PerturbOp::frame_rotation)) current = frame_rotation(current, spec, rng);
  if (ops.contains(PerturbOp::frame_scaling)) current = frame_scaling(current, spec, rng);
  return current;
}

}  // namespace priormap
