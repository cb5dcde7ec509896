#include "priormap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "priormap/errors.hpp"

namespace priormap {

namespace {

double point_distance(const Point3& a, const Point3& b, DistanceMode mode) {
  return mode == DistanceMode::planar ? planar_distance(a, b) : distance3(a, b);
}

double directed_mean(const std::vector<Point3>& from, const std::vector<Point3>& to,
                     DistanceMode mode) {
  double total = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, point_distance(p, q, mode));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

struct ClassFrame {
  std::vector<double> scores;
  std::vector<std::vector<double>> cd;
  std::size_t num_gt = 0;
};

double bounds_gap(const Bounds2& a, const Bounds2& b) {
  const double de = std::max({0.0, a.min_e - b.max_e, b.min_e - a.max_e});
  const double dn = std::max({0.0, a.min_n - b.max_n, b.min_n - a.max_n});
  return std::hypot(de, dn);
}

// Pairs whose bounding boxes are at least `cutoff` apart cannot match at any
// threshold up to `cutoff` (every nearest-neighbour distance is bounded below
// by the gap), so their distance is recorded as infinity without computing it.
ClassFrame prepare(std::span<const ScoredVector> preds, std::span<const MapVector> gts,
                   ElementClass cls, const EvalOptions& opts, double cutoff) {
  ClassFrame out;
  std::vector<std::vector<Point3>> gt_pts;
  std::vector<Bounds2> gt_box;
  for (const auto& g : gts) {
    if (g.cls != cls) continue;
    gt_pts.push_back(resample_points(g.geometry.points(), opts.n_pts));
    gt_box.push_back(bounds(g.geometry));
  }
  out.num_gt = gt_pts.size();
  for (const auto& p : preds) {
    if (p.vector.cls != cls) continue;
    const auto pts = resample_points(p.vector.geometry.points(), opts.n_pts);
    const Bounds2 box = bounds(p.vector.geometry);
    std::vector<double> row;
    row.reserve(gt_pts.size());
    for (std::size_t k = 0; k < gt_pts.size(); ++k) {
      if (bounds_gap(box, gt_box[k]) >= cutoff) {
        row.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      const auto& g = gt_pts[k];
      row.push_back(0.5 * (directed_mean(pts, g, opts.mode) + directed_mean(g, pts, opts.mode)));
    }
    out.scores.push_back(p.score);
    out.cd.push_back(std::move(row));
  }
  return out;
}

struct Ranked {
  double score;
  std::size_t frame;
  std::size_t rank;
  bool tp;
};

APResult pooled_ap(const std::vector<ClassFrame>& frames, double threshold) {
  APResult result;
  std::vector<Ranked> ranked;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& frame = frames[f];
    result.num_gt += frame.num_gt;
    const auto flags = greedy_match(frame.scores, frame.cd, threshold);
    for (std::size_t k = 0; k < flags.size(); ++k) ranked.push_back({frame.scores[k], f, k, flags[k]});
  }
  result.num_pred = ranked.size();
  result.defined = result.num_gt > 0;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
  std::vector<bool> tp;
  tp.reserve(ranked.size());
  for (const auto& r : ranked) {
    tp.push_back(r.tp);
    result.num_tp += r.tp ? 1 : 0;
  }
  result.ap = result.defined ? ap_from_ranked(tp, result.num_gt) : 0.0;
  return result;
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("Chamfer threshold must be finite and > 0");
  }
}

}  // namespace

double chamfer_distance(const Polyline3& a, const Polyline3& b, std::size_t n_pts,
                        DistanceMode mode) {
  const auto pa = resample_points(a.points(), n_pts);
  const auto pb = resample_points(b.points(), n_pts);
  return 0.5 * (directed_mean(pa, pb, mode) + directed_mean(pb, pa, mode));
}

std::vector<bool> greedy_match(std::span<const double> scores,
                               const std::vector<std::vector<double>>& cd, double threshold) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const std::size_t num_gt = cd.empty() ? 0 : cd.front().size();
  std::vector<bool> gt_taken(num_gt, false);
  std::vector<bool> tp(scores.size(), false);
  for (auto p : order) {
    std::size_t best = num_gt;
    double best_cd = threshold;
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (!gt_taken[g] && cd[p][g] < best_cd) {
        best_cd = cd[p][g];
        best = g;
      }
    }
    if (best < num_gt) {
      gt_taken[best] = true;
      tp[p] = true;
    }
  }
  return tp;
}

double ap_from_ranked(const std::vector<bool>& tp_in_rank_order, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = tp_in_rank_order.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += tp_in_rank_order[k] ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  double previous_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - previous_recall) * precision[k];
    previous_recall = recall[k];
  }
  return ap;
}

APResult average_precision(std::span<const ScoredVector> preds, std::span<const MapVector> gts,
                           ElementClass cls, double threshold, EvalOptions opts) {
  check_threshold(threshold);
  std::vector<ClassFrame> frames{prepare(preds, gts, cls, opts, threshold)};
  return pooled_ap(frames, threshold);
}

APResult average_precision(std::span<const EvalFrame> frames, ElementClass cls, double threshold,
                           EvalOptions opts) {
  check_threshold(threshold);
  std::vector<ClassFrame> prepared;
  prepared.reserve(frames.size());
  for (const auto& f : frames) prepared.push_back(prepare(f.preds, f.gts, cls, opts, threshold));
  return pooled_ap(prepared, threshold);
}

APReport evaluate(std::span<const EvalFrame> frames, const std::vector<double>& thresholds,
                  EvalOptions opts) {
  if (thresholds.empty()) throw ConfigError("evaluation needs at least one threshold");
  for (double t : thresholds) check_threshold(t);

  APReport report;
  report.thresholds = thresholds;
  const double cutoff = *std::max_element(thresholds.begin(), thresholds.end());
  double map_sum = 0.0;
  std::size_t defined_classes = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ElementClass cls = kAllClasses[c];
    std::vector<ClassFrame> prepared;
    prepared.reserve(frames.size());
    for (const auto& f : frames) prepared.push_back(prepare(f.preds, f.gts, cls, opts, cutoff));

    ClassReport& row = report.classes[c];
    row.cls = cls;
    for (double t : thresholds) {
      const APResult r = pooled_ap(prepared, t);
      row.ap.push_back(r.ap);
      row.defined = r.defined;
      row.num_gt = r.num_gt;
      row.num_pred = r.num_pred;
    }
    row.mean_ap = std::accumulate(row.ap.begin(), row.ap.end(), 0.0) / static_cast<double>(row.ap.size());
    if (row.defined) {
      map_sum += row.mean_ap;
      ++defined_classes;
    }
  }
  report.map = defined_classes > 0 ? map_sum / static_cast<double>(defined_classes) : 0.0;
  return report;
}

APReport evaluate(std::span<const MapVector> preds, std::span<const MapVector> gts,
                  const std::vector<double>& thresholds, EvalOptions opts) {
  EvalFrame frame;
  frame.gts.assign(gts.begin(), gts.end());
  for (const auto& p : preds) frame.preds.push_back({p, p.confidence});
  return evaluate(std::span<const EvalFrame>(&frame, 1), thresholds, opts);
}

std::string format_report_table(const APReport& report) {
  std::string out;
  char buf[64];
  out += "class          ";
  for (double t : report.thresholds) {
    std::snprintf(buf, sizeof(buf), " AP@%-5.2f", t);
    out += buf;
  }
  out += "   mean    #gt  #pred\n";
  for (const auto& row : report.classes) {
    std::snprintf(buf, sizeof(buf), "%-15s", std::string(to_string(row.cls)).c_str());
    out += buf;
    for (double ap : row.ap) {
      std::snprintf(buf, sizeof(buf), " %8.3f", ap);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), " %6.3f%s %6zu %6zu\n", row.mean_ap, row.defined ? " " : "*",
                  row.num_gt, row.num_pred);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "mAP %.3f\n", report.map);
  out += buf;
  bool any_undefined = false;
  for (const auto& row : report.classes) any_undefined = any_undefined || !row.defined;
  if (any_undefined) out += "(* class has no ground truth and is excluded from mAP)\n";
  return out;
}

std::string format_report_json(const APReport& report) {
  nlohmann::ordered_json j;
  j["thresholds"] = report.thresholds;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto& row : report.classes) {
    nlohmann::ordered_json c;
    c["class"] = std::string(to_string(row.cls));
    c["ap"] = row.ap;
    c["mean_ap"] = row.mean_ap;
    c["defined"] = row.defined;
    c["num_gt"] = row.num_gt;
    c["num_pred"] = row.num_pred;
    j["classes"].push_back(c);
  }
  j["mAP"] = report.map;
  return j.dump(2) + "\n";
}

}  // namespace priormap
