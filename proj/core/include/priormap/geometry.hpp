#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace priormap {

// Coordinates are meters. In the global frame (e, n) are UTM east/north; in
// the ego frame e points forward and n points left. z is elevation.
struct Point3 {
  double e = 0.0;
  double n = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

// Ordered vertex list with at least two points, all finite, and no two
// consecutive identical points. Construction validates and throws
// GeometryError otherwise.
class Polyline3 {
 public:
  explicit Polyline3(std::vector<Point3> points);

  const std::vector<Point3>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }

  // 3D arc length.
  double length() const;

  friend bool operator==(const Polyline3&, const Polyline3&) = default;

 private:
  std::vector<Point3> points_;
};

// Yaw is counterclockwise-positive with zero along UTM east, normalized to
// [-pi, pi). Transforms are planar: yaw rotates (e, n) and z is only
// translated, never rotated.
struct EgoPose {
  double utm_e = 0.0;
  double utm_n = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  friend bool operator==(const EgoPose&, const EgoPose&) = default;
};

// Throws ConfigError for non-finite fields or yaw outside [-pi, pi).
void validate(const EgoPose& pose);

// Wraps any finite angle into [-pi, pi).
double normalize_yaw(double yaw);

// Ego-centric axis-aligned rectangle [-rear, front] x [-right, left]. The
// rectangle is closed: boundary points are inside.
struct PerceptionRange {
  double front = 30.0;
  double rear = 30.0;
  double left = 15.0;
  double right = 15.0;

  double long_side() const { return front + rear; }
  double short_side() const { return left + right; }
  // Largest distance from the ego origin to a rectangle corner.
  double max_corner_distance() const;

  friend bool operator==(const PerceptionRange&, const PerceptionRange&) = default;
};

void validate(const PerceptionRange& range);

Point3 ego_to_global(const Point3& p, const EgoPose& pose);
Point3 global_to_ego(const Point3& p, const EgoPose& pose);
Polyline3 ego_to_global(const Polyline3& poly, const EgoPose& pose);
Polyline3 global_to_ego(const Polyline3& poly, const EgoPose& pose);

bool contains(const PerceptionRange& range, const Point3& p);

// True iff any segment of the (ego-frame) polyline meets the closed range
// rectangle.
bool intersects_range(std::span<const Point3> points, const PerceptionRange& range);
bool intersects_range(const Polyline3& poly, const PerceptionRange& range);

// n_pts points equally spaced in 3D arc length along the input; the first and
// last input points are reproduced exactly. Throws GeometryError when
// n_pts < 2 or the input has zero length.
std::vector<Point3> resample_points(std::span<const Point3> points, std::size_t n_pts);
Polyline3 resample_polyline(const Polyline3& poly, std::size_t n_pts);

// Planar distance from p to the segment [a, b] (z ignored).
double planar_distance_to_segment(const Point3& p, const Point3& a, const Point3& b);

double planar_distance(const Point3& a, const Point3& b);
double distance3(const Point3& a, const Point3& b);

struct Bounds2 {
  double min_e, min_n, max_e, max_n;
};
Bounds2 bounds(const Polyline3& poly);

}  // namespace priormap
