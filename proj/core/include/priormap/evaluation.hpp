#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "priormap/geometry.hpp"
#include "priormap/map_vector.hpp"

namespace priormap {

enum class DistanceMode { planar, full3d };

inline constexpr std::size_t kChamferPoints = 20;

// Symmetric Chamfer distance between two polylines after resampling each to
// n_pts points: the mean of the two directed mean nearest-neighbour
// distances. Throws GeometryError on degenerate input.
double chamfer_distance(const Polyline3& a, const Polyline3& b, std::size_t n_pts = kChamferPoints,
                        DistanceMode mode = DistanceMode::planar);

struct ScoredVector {
  MapVector vector;
  double score;
};

// Predictions and ground truth of one frame. Matching never crosses frames.
struct EvalFrame {
  std::vector<ScoredVector> preds;
  std::vector<MapVector> gts;
};

struct EvalOptions {
  std::size_t n_pts = kChamferPoints;
  DistanceMode mode = DistanceMode::planar;
};

// AP of one class at one threshold. `defined` is false when there is no
// ground truth of the class; ap is then reported as 0.
struct APResult {
  double ap = 0.0;
  bool defined = false;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
  std::size_t num_tp = 0;
};

// Greedy score-ordered one-to-one matching. `cd[p][g]` is the Chamfer
// distance between prediction p and ground truth g. Predictions are visited
// by descending score (ties by index); each takes the nearest unmatched
// ground truth with distance strictly below `threshold`. Returns the true
// positive flag of every prediction, in input order.
std::vector<bool> greedy_match(std::span<const double> scores,
                               const std::vector<std::vector<double>>& cd, double threshold);

// All-point AP from a ranked list: sum over recall steps of the step width
// times the precision maximised over all later ranks.
double ap_from_ranked(const std::vector<bool>& tp_in_rank_order, std::size_t num_gt);

// Single-frame AP; inputs may contain several classes, only `cls` is scored.
APResult average_precision(std::span<const ScoredVector> preds, std::span<const MapVector> gts,
                           ElementClass cls, double threshold, EvalOptions opts = {});
APResult average_precision(std::span<const EvalFrame> frames, ElementClass cls, double threshold,
                           EvalOptions opts = {});

inline const std::vector<double> kStandardThresholds = {0.5, 1.0, 1.5};
inline const std::vector<double> kExtendedThresholds = {1.0, 1.5, 2.0};

struct ClassReport {
  ElementClass cls;
  std::vector<double> ap;  // one per threshold
  double mean_ap = 0.0;
  bool defined = false;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
};

struct APReport {
  std::vector<double> thresholds;
  std::array<ClassReport, kNumClasses> classes;
  // Mean of mean_ap over classes with ground truth; 0 when none has any.
  double map = 0.0;
};

APReport evaluate(std::span<const EvalFrame> frames,
                  const std::vector<double>& thresholds = kStandardThresholds,
                  EvalOptions opts = {});

// Single frame whose prediction scores are the vectors' confidences.
APReport evaluate(std::span<const MapVector> preds, std::span<const MapVector> gts,
                  const std::vector<double>& thresholds = kStandardThresholds,
                  EvalOptions opts = {});

// Fixed-width text table, one row per class plus the mAP line.
std::string format_report_table(const APReport& report);
// JSON record of the same content.
std::string format_report_json(const APReport& report);

}  // namespace priormap
