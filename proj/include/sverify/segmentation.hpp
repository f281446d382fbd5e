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
#include <cstdint>
#include <string>
#include <vector>

#include "sverify/embedding.hpp"
#include "sverify/error.hpp"

namespace sverify {

struct FrameRange {
  std::int64_t start = 0;  // inclusive
  std::int64_t end = 0;    // exclusive

  std::int64_t length() const { return end - start; }
  bool operator==(const FrameRange&) const = default;
};

/// Overlapping segmentation of a frame sequence. Hop is always half the
/// window (integer division); the last segment is right-anchored so the
/// trailing frames are never dropped.
struct SegmentPlan {
  std::int64_t total_frames = 0;
  std::int64_t window = 0;
  std::int64_t hop = 0;
  std::vector<FrameRange> ranges;
};

namespace detail {

inline std::vector<FrameRange> plan_once(std::int64_t total_frames,
                                         std::int64_t window) {
  std::vector<FrameRange> ranges;
  const std::int64_t hop = window / 2;
  for (std::int64_t start = 0; start + window <= total_frames; start += hop) {
    ranges.push_back({start, start + window});
  }
  if (total_frames >= window &&
      (ranges.empty() || ranges.back().start != total_frames - window)) {
    ranges.push_back({total_frames - window, total_frames});
  }
  return ranges;
}

}  // namespace detail

/// Plans half-overlapping windows over [0, total_frames). When fewer than
/// min_segments windows fit, the window is halved (floored at window_min)
/// and planning restarts.
inline SegmentPlan plan_segments(std::int64_t total_frames, std::int64_t window,
                                 std::int64_t min_segments,
                                 std::int64_t window_min) {
  if (total_frames < window_min) {
    throw Error(ErrorCode::kTooShort,
                std::to_string(total_frames) + " frames, need at least " +
                    std::to_string(window_min));
  }
  if (window <= 0 || window_min <= 0 || min_segments <= 0) {
    throw Error(ErrorCode::kOutOfRange, "plan_segments: nonpositive parameter");
  }
  auto ranges = detail::plan_once(total_frames, window);
  while (static_cast<std::int64_t>(ranges.size()) < min_segments &&
         window > window_min) {
    window = std::max(window / 2, window_min);
    ranges = detail::plan_once(total_frames, window);
  }
  return SegmentPlan{total_frames, window, window / 2, std::move(ranges)};
}

/// Sum of unit-normalized segment embeddings (the consistency vector c).
inline std::vector<double> consistency_vector(
    const std::vector<Embedding>& segments) {
  if (segments.empty()) {
    throw Error(ErrorCode::kEmptyList, "consistency_vector of no segments");
  }
  const std::size_t dim = segments.front().vector.size();
  std::vector<double> c(dim, 0.0);
  for (const auto& seg : segments) {
    if (seg.vector.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "consistency_vector: ragged segments");
    }
    const auto unit = l2_normalize(seg.vector);
    for (std::size_t i = 0; i < dim; ++i) c[i] += unit[i];
  }
  return c;
}

/// Consistency Measure Factor: ||c|| / N, clamped to [0, 1]. 1 means all
/// segment embeddings point the same way; 0 means full cancellation.
inline double cmf(const std::vector<Embedding>& segments) {
  const auto c = consistency_vector(segments);
  const double value = norm(c) / static_cast<double>(segments.size());
  return std::clamp(value, 0.0, 1.0);
}

/// Mean cosine between every segment embedding of one side and the other
/// side's whole-utterance embedding.
inline double segment_score(const std::vector<Embedding>& segments,
                            const Embedding& y) {
  if (segments.empty()) {
    throw Error(ErrorCode::kEmptyList, "segment_score over no segments");
  }
  double acc = 0.0;
  for (const auto& seg : segments) acc += cosine(seg.vector, y.vector);
  return acc / static_cast<double>(segments.size());
}

/// One utterance's segment embeddings together with the derived consistency
/// vector and CMF.
struct SegmentSet {
  std::string utterance_id;
  std::vector<Embedding> segment_embeddings;
  std::vector<double> consistency;
  double cmf_value = 0.0;

  static SegmentSet build(std::string utterance_id,
                          std::vector<Embedding> segments) {
    SegmentSet set;
    set.utterance_id = std::move(utterance_id);
    set.consistency = consistency_vector(segments);
    set.cmf_value = std::clamp(
        norm(set.consistency) / static_cast<double>(segments.size()), 0.0, 1.0);
    set.segment_embeddings = std::move(segments);
    return set;
  }
};

}  // namespace sverify
