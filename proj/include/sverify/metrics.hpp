// Copyright (c) 2026 The sverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sverify/error.hpp"
#include "sverify/scoring.hpp"

namespace sverify {

struct FusionSpec {
  std::vector<std::string> system_names;
  std::vector<double> weights;
};

struct DcfParams {
  double c_miss = 1.0;
  double c_fa = 1.0;
  double p_target = 0.05;
};

/// Weighted per-trial mean of one score column across systems. Weights are
/// normalized to sum 1; trial lists must match id-for-id.
inline ScoreTable fuse(const std::vector<const ScoreTable*>& tables,
                       const FusionSpec& spec, const std::string& column) {
  if (tables.empty()) throw Error(ErrorCode::kEmptyInput, "fuse of no systems");
  if (spec.weights.size() != tables.size()) {
    throw Error(ErrorCode::kTrialMismatch,
                "fuse: " + std::to_string(tables.size()) + " systems, " +
                    std::to_string(spec.weights.size()) + " weights");
  }
  double weight_sum = 0.0;
  for (double w : spec.weights) {
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::kOutOfRange, "fuse: non-finite weight");
    }
    weight_sum += w;
  }
  if (std::abs(weight_sum) < 1e-12) {
    throw Error(ErrorCode::kAllZeroWeights, "fuse: weights sum to zero");
  }

  const TrialList& trials = tables.front()->trials;
  for (const ScoreTable* table : tables) {
    if (table->trials.size() != trials.size()) {
      throw Error(ErrorCode::kTrialMismatch, "fuse: trial count differs");
    }
    for (std::size_t i = 0; i < trials.size(); ++i) {
      if (table->trials[i].enroll_id != trials[i].enroll_id ||
          table->trials[i].test_id != trials[i].test_id) {
        throw Error(ErrorCode::kTrialMismatch,
                    "fuse: trial " + std::to_string(i) + " differs");
      }
    }
  }

  ScoreTable out;
  out.trials = trials;
  auto& fused = out.columns["fused"];
  fused.assign(trials.size(), 0.0);
  for (std::size_t s = 0; s < tables.size(); ++s) {
    const auto& scores = tables[s]->column(column);
    const double w = spec.weights[s] / weight_sum;
    for (std::size_t i = 0; i < trials.size(); ++i) fused[i] += w * scores[i];
  }
  return out;
}

namespace detail {

/// One ROC operating point: the error rates of thresholding at a given
/// score value with the `P_miss: <` / `P_fa: >=` convention.
struct OperatingPoint {
  double p_miss = 0.0;
  double p_fa = 0.0;
};

/// Operating points for thresholds at every distinct score, ordered by
/// threshold ascending, with the two trivial endpoints (accept all /
/// reject all) prepended and appended.
inline std::vector<OperatingPoint> sweep_operating_points(
    const std::vector<double>& scores, const std::vector<bool>& targets,
    std::size_t n_target, std::size_t n_nontarget) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<OperatingPoint> points;
  points.reserve(scores.size() + 2);
  points.push_back({0.0, 1.0});  // threshold below every score

  std::size_t targets_below = 0;
  std::size_t nontargets_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = scores[order[i]];
    // All scores strictly below `value` have been consumed.
    points.push_back(
        {static_cast<double>(targets_below) / static_cast<double>(n_target),
         static_cast<double>(n_nontarget - nontargets_below) /
             static_cast<double>(n_nontarget)});
    while (i < order.size() && scores[order[i]] == value) {
      if (targets[order[i]]) {
        ++targets_below;
      } else {
        ++nontargets_below;
      }
      ++i;
    }
  }
  points.push_back({1.0, 0.0});  // threshold above every score
  return points;
}

inline void split_labels(const std::vector<double>& scores,
                         const std::vector<bool>& targets,
                         std::size_t* n_target, std::size_t* n_nontarget) {
  if (scores.size() != targets.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "scores and labels have different lengths");
  }
  *n_target = 0;
  for (bool t : targets) *n_target += t ? 1 : 0;
  *n_nontarget = targets.size() - *n_target;
  if (*n_target == 0 || *n_nontarget == 0) {
    throw Error(ErrorCode::kSingleClass,
                "need at least one target and one nontarget trial");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kOutOfRange, "non-finite score");
    }
  }
}

}  // namespace detail

/// Equal error rate: where the miss rate meets the false-alarm rate, with
/// linear interpolation between adjacent operating points.
inline double eer(const std::vector<double>& scores,
                  const std::vector<bool>& targets) {
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  detail::split_labels(scores, targets, &n_target, &n_nontarget);
  const auto points =
      detail::sweep_operating_points(scores, targets, n_target, n_nontarget);

  // diff = P_miss - P_fa runs from -1 to +1 as the threshold rises.
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double d0 = points[i].p_miss - points[i].p_fa;
    const double d1 = points[i + 1].p_miss - points[i + 1].p_fa;
    if (d0 <= 0.0 && d1 >= 0.0) {
      if (d1 == d0) return std::clamp(points[i].p_miss, 0.0, 1.0);
      const double t = (0.0 - d0) / (d1 - d0);
      const double value =
          points[i].p_miss + t * (points[i + 1].p_miss - points[i].p_miss);
      return std::clamp(value, 0.0, 1.0);
    }
  }
  // Unreachable: the endpoints bracket zero by construction.
  throw Error(ErrorCode::kOutOfRange, "eer: no miss/false-alarm crossing");
}

/// Minimum normalized detection cost over all thresholds (every distinct
/// score plus the accept-all and reject-all endpoints).
inline double min_dcf(const std::vector<double>& scores,
                      const std::vector<bool>& targets,
                      const DcfParams& params = {}) {
  if (params.c_miss <= 0.0 || params.c_fa <= 0.0) {
    throw Error(ErrorCode::kOutOfRange, "DCF costs must be positive");
  }
  if (params.p_target <= 0.0 || params.p_target >= 1.0) {
    throw Error(ErrorCode::kOutOfRange, "p_target must lie in (0,1)");
  }
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  detail::split_labels(scores, targets, &n_target, &n_nontarget);
  const auto points =
      detail::sweep_operating_points(scores, targets, n_target, n_nontarget);

  const double miss_weight = params.c_miss * params.p_target;
  const double fa_weight = params.c_fa * (1.0 - params.p_target);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& point : points) {
    best = std::min(best, miss_weight * point.p_miss + fa_weight * point.p_fa);
  }
  return best / std::min(miss_weight, fa_weight);
}

}  // namespace sverify
