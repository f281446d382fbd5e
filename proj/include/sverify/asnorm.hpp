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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sverify/embedding.hpp"
#include "sverify/error.hpp"

namespace sverify {

inline constexpr double kDegenerateStdEps = 1e-9;
inline constexpr int kDefaultTopK = 400;

/// Speaker-averaged normalization cohort. One embedding per speaker,
/// ordered by speaker id so stats are reproducible.
struct Cohort {
  std::vector<std::pair<SpeakerLabel, Embedding>> speaker_embeddings;
  int top_k = kDefaultTopK;
};

/// Per-utterance normalization statistics over the top-k cohort scores.
/// `mean` doubles as the imposter mean consumed by the QMF features.
struct CohortStats {
  double mean = 0.0;
  double std = 0.0;
  double imposter_mean = 0.0;
};

using StatsMap = std::map<std::string, CohortStats>;

/// Averages embeddings speaker-wise. Entries come out sorted by speaker id.
inline Cohort build_cohort(
    const std::vector<std::pair<SpeakerLabel, Embedding>>& labeled, int top_k) {
  if (labeled.empty()) {
    throw Error(ErrorCode::kEmptyInput, "build_cohort with no embeddings");
  }
  std::map<std::string, std::vector<std::vector<double>>> by_speaker;
  for (const auto& [label, emb] : labeled) {
    by_speaker[label.speaker_id].push_back(emb.vector);
  }
  if (top_k <= 0 || static_cast<std::size_t>(top_k) > by_speaker.size()) {
    throw Error(ErrorCode::kTopKTooLarge,
                "top_k " + std::to_string(top_k) + " with " +
                    std::to_string(by_speaker.size()) + " cohort speakers");
  }
  Cohort cohort;
  cohort.top_k = top_k;
  for (auto& [speaker, vectors] : by_speaker) {
    Embedding mean;
    mean.utterance_id = speaker;
    mean.vector = mean_vector(vectors);
    if (norm(mean.vector) < kZeroNormEps) {
      throw Error(ErrorCode::kZeroVector,
                  "cohort speaker '" + speaker + "' averaged to zero");
    }
    cohort.speaker_embeddings.emplace_back(SpeakerLabel{speaker},
                                           std::move(mean));
  }
  return cohort;
}

/// Scores e against every cohort speaker, keeps the top-k values and returns
/// their mean and population standard deviation.
inline CohortStats cohort_stats(const Embedding& e, const Cohort& cohort) {
  std::vector<double> scores;
  scores.reserve(cohort.speaker_embeddings.size());
  for (const auto& [label, emb] : cohort.speaker_embeddings) {
    scores.push_back(cosine(e.vector, emb.vector));
  }
  const std::size_t k = static_cast<std::size_t>(cohort.top_k);
  if (k > scores.size()) {
    throw Error(ErrorCode::kTopKTooLarge,
                "top_k exceeds cohort size " + std::to_string(scores.size()));
  }
  std::partial_sort(scores.begin(), scores.begin() + k, scores.end(),
                    std::greater<double>());
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) mean += scores[i];
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = scores[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(k);
  const double std = std::sqrt(var);
  if (std < kDegenerateStdEps) {
    throw Error(ErrorCode::kDegenerateStd,
                "top-" + std::to_string(k) + " cohort scores for '" +
                    e.utterance_id + "' have (near-)zero spread");
  }
  return CohortStats{mean, std, mean};
}

/// Symmetric adaptive score normalization: the mean of the enroll-side and
/// test-side z-norms of the trial score.
inline double asnorm_score(double raw, const CohortStats& enroll_stats,
                           const CohortStats& test_stats) {
  if (enroll_stats.std < kDegenerateStdEps ||
      test_stats.std < kDegenerateStdEps) {
    throw Error(ErrorCode::kDegenerateStd, "asnorm_score with degenerate std");
  }
  return 0.5 * ((raw - enroll_stats.mean) / enroll_stats.std +
                (raw - test_stats.mean) / test_stats.std);
}

}  // namespace sverify
