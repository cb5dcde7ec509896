#include "priormap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "priormap/errors.hpp"

namespace priormap {

namespace {

bool finite(const Point3& p) {
  return std::isfinite(p.e) && std::isfinite(p.n) && std::isfinite(p.z);
}

}  // namespace

Polyline3::Polyline3(std::vector<Point3> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw GeometryError("polyline needs at least 2 points, got " +
                        std::to_string(points_.size()));
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!finite(points_[i])) {
      throw GeometryError("non-finite coordinate at vertex " + std::to_string(i));
    }
    if (i > 0 && points_[i] == points_[i - 1]) {
      throw GeometryError("repeated consecutive vertex at index " + std::to_string(i));
    }
  }
}

double Polyline3::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) total += distance3(points_[i - 1], points_[i]);
  return total;
}

double normalize_yaw(double yaw) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(yaw + std::numbers::pi, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  wrapped -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift back.
  if (wrapped >= std::numbers::pi) wrapped -= two_pi;
  return wrapped;
}

void validate(const EgoPose& pose) {
  if (!std::isfinite(pose.utm_e) || !std::isfinite(pose.utm_n) || !std::isfinite(pose.z) ||
      !std::isfinite(pose.yaw)) {
    throw ConfigError("ego pose has a non-finite field");
  }
  if (pose.yaw < -std::numbers::pi || pose.yaw >= std::numbers::pi) {
    throw ConfigError("ego pose yaw must lie in [-pi, pi)");
  }
}

double PerceptionRange::max_corner_distance() const {
  const double de = std::max(front, rear);
  const double dn = std::max(left, right);
  return std::hypot(de, dn);
}

void validate(const PerceptionRange& range) {
  for (double v : {range.front, range.rear, range.left, range.right}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("perception range extents must be finite and > 0");
    }
  }
}

Point3 ego_to_global(const Point3& p, const EgoPose& pose) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  return {c * p.e - s * p.n + pose.utm_e, s * p.e + c * p.n + pose.utm_n, p.z + pose.z};
}

Point3 global_to_ego(const Point3& p, const EgoPose& pose) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double de = p.e - pose.utm_e;
  const double dn = p.n - pose.utm_n;
  return {c * de + s * dn, -s * de + c * dn, p.z - pose.z};
}

Polyline3 ego_to_global(const Polyline3& poly, const EgoPose& pose) {
  std::vector<Point3> out;
  out.reserve(poly.size());
  for (const auto& p : poly.points()) out.push_back(ego_to_global(p, pose));
  return Polyline3(std::move(out));
}

Polyline3 global_to_ego(const Polyline3& poly, const EgoPose& pose) {
  std::vector<Point3> out;
  out.reserve(poly.size());
  for (const auto& p : poly.points()) out.push_back(global_to_ego(p, pose));
  return Polyline3(std::move(out));
}

bool contains(const PerceptionRange& range, const Point3& p) {
  return p.e >= -range.rear && p.e <= range.front && p.n >= -range.right && p.n <= range.left;
}

namespace {

// Liang-Barsky against the closed rectangle.
bool segment_meets_range(const Point3& a, const Point3& b, const PerceptionRange& range) {
  const double de = b.e - a.e;
  const double dn = b.n - a.n;
  const double p[4] = {-de, de, -dn, dn};
  const double q[4] = {a.e + range.rear, range.front - a.e, a.n + range.right,
                       range.left - a.n};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double r = q[k] / p[k];
    if (p[k] < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
  }
  return t0 <= t1;
}

}  // namespace

bool intersects_range(std::span<const Point3> points, const PerceptionRange& range) {
  if (points.empty()) return false;
  if (points.size() == 1) return contains(range, points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (segment_meets_range(points[i - 1], points[i], range)) return true;
  }
  return false;
}

bool intersects_range(const Polyline3& poly, const PerceptionRange& range) {
  return intersects_range(std::span<const Point3>(poly.points()), range);
}

std::vector<Point3> resample_points(std::span<const Point3> points, std::size_t n_pts) {
  if (n_pts < 2) throw GeometryError("resampling needs n_pts >= 2");
  if (points.size() < 2) throw GeometryError("resampling needs at least 2 input points");

  std::vector<double> cumulative(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + distance3(points[i - 1], points[i]);
  }
  const double total = cumulative.back();
  if (!(total > 0.0)) throw GeometryError("cannot resample a zero-length polyline");

  std::vector<Point3> out;
  out.reserve(n_pts);
  out.push_back(points.front());
  std::size_t seg = 1;
  for (std::size_t k = 1; k + 1 < n_pts; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n_pts - 1);
    while (seg + 1 < points.size() && cumulative[seg] < target) ++seg;
    const double seg_len = cumulative[seg] - cumulative[seg - 1];
    const double t = seg_len > 0.0 ? (target - cumulative[seg - 1]) / seg_len : 0.0;
    const Point3& a = points[seg - 1];
    const Point3& b = points[seg];
    out.push_back({a.e + t * (b.e - a.e), a.n + t * (b.n - a.n), a.z + t * (b.z - a.z)});
  }
  out.push_back(points.back());
  return out;
}

Polyline3 resample_polyline(const Polyline3& poly, std::size_t n_pts) {
  return Polyline3(resample_points(poly.points(), n_pts));
}

double planar_distance(const Point3& a, const Point3& b) { return std::hypot(a.e - b.e, a.n - b.n); }

double distance3(const Point3& a, const Point3& b) {
  const double de = a.e - b.e;
  const double dn = a.n - b.n;
  const double dz = a.z - b.z;
  return std::sqrt(de * de + dn * dn + dz * dz);
}

double planar_distance_to_segment(const Point3& p, const Point3& a, const Point3& b) {
  const double de = b.e - a.e;
  const double dn = b.n - a.n;
  const double len2 = de * de + dn * dn;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((p.e - a.e) * de + (p.n - a.n) * dn) / len2, 0.0, 1.0);
  }
  return std::hypot(p.e - (a.e + t * de), p.n - (a.n + t * dn));
}

Bounds2 bounds(const Polyline3& poly) {
  Bounds2 b{poly[0].e, poly[0].n, poly[0].e, poly[0].n};
  for (const auto& p : poly.points()) {
    b.min_e = std::min(b.min_e, p.e);
    b.min_n = std::min(b.min_n, p.n);
    b.max_e = std::max(b.max_e, p.e);
    b.max_n = std::max(b.max_n, p.n);
  }
  return b;
}

}  // namespace priormap
