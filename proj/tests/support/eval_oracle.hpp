#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <priormap/evaluation.hpp>

namespace priormap::testing {

// Exhaustive matching oracle for small single-class scenes. Every injective
// partial assignment of predictions to ground truth is enumerated; those
// consistent with score-ordered nearest-unmatched greedy matching are kept,
// and the largest AP among them is returned. AP is computed from first
// principles: precision at each rank, interpolated as the maximum precision
// at any rank with recall >= the current recall.
inline double oracle_ap(const std::vector<double>& scores, const std::vector<std::vector<double>>& cd,
                        std::size_t num_gt, double threshold) {
  if (num_gt == 0) return 0.0;
  const std::size_t np = scores.size();
  std::vector<std::size_t> order(np);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<int> assign(np, -1);  // -1 = unmatched
  std::vector<bool> used(num_gt, false);
  double best = -1.0;

  const auto consistent = [&]() {
    std::vector<bool> taken(num_gt, false);
    for (std::size_t p : order) {
      // Nearest unmatched ground truth under threshold, if any.
      double nearest = threshold;
      std::vector<int> argmins;
      for (std::size_t g = 0; g < num_gt; ++g) {
        if (taken[g] || !(cd[p][g] < threshold)) continue;
        if (cd[p][g] < nearest) {
          nearest = cd[p][g];
          argmins = {static_cast<int>(g)};
        } else if (cd[p][g] == nearest) {
          argmins.push_back(static_cast<int>(g));
        }
      }
      if (argmins.empty()) {
        if (assign[p] != -1) return false;
      } else {
        if (std::find(argmins.begin(), argmins.end(), assign[p]) == argmins.end()) return false;
        taken[static_cast<std::size_t>(assign[p])] = true;
      }
    }
    return true;
  };

  const auto ap_of = [&]() {
    std::vector<double> prec, rec;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < np; ++k) {
      tp += assign[order[k]] >= 0 ? 1 : 0;
      prec.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
      rec.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    }
    double ap = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < np; ++k) {
      if (rec[k] <= prev) continue;
      double p_interp = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        if (rec[j] >= rec[k]) p_interp = std::max(p_interp, prec[j]);
      }
      ap += (rec[k] - prev) * p_interp;
      prev = rec[k];
    }
    return ap;
  };

  std::function<void(std::size_t)> recurse = [&](std::size_t p) {
    if (p == np) {
      if (consistent()) best = std::max(best, ap_of());
      return;
    }
    assign[p] = -1;
    recurse(p + 1);
    for (std::size_t g = 0; g < num_gt; ++g) {
      if (used[g]) continue;
      used[g] = true;
      assign[p] = static_cast<int>(g);
      recurse(p + 1);
      used[g] = false;
      assign[p] = -1;
    }
  };
  recurse(0);
  return best;
}

}  // namespace priormap::testing
