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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sverify/error.hpp"

namespace sverify {

// Norms below this are treated as zero vectors.
inline constexpr double kZeroNormEps = 1e-12;

/// A raw (non-normalized) utterance embedding. The magnitude is meaningful
/// downstream, so callers must not normalize in place.
struct Embedding {
  std::string utterance_id;
  std::vector<double> vector;
  double duration_s = 0.0;  // source audio duration in seconds, 0 if unknown
};

struct SpeakerLabel {
  std::string speaker_id;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dot: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// Scales v to unit Euclidean length. Throws ZeroVector when ||v|| < 1e-12.
inline std::vector<double> l2_normalize(std::span<const double> v) {
  const double n = norm(v);
  if (n < kZeroNormEps) {
    throw Error(ErrorCode::kZeroVector, "l2_normalize on (near-)zero vector");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

/// Cosine similarity, clamped to [-1, 1] after rounding.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kZeroNormEps || nb < kZeroNormEps) {
    throw Error(ErrorCode::kZeroVector, "cosine with (near-)zero vector");
  }
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

/// Euclidean norm of the raw, non-normalized embedding vector.
inline double magnitude(const Embedding& e) { return norm(e.vector); }

inline std::vector<double> mean_vector(
    const std::vector<std::vector<double>>& vs) {
  if (vs.empty()) throw Error(ErrorCode::kEmptyList, "mean_vector of nothing");
  const std::size_t dim = vs.front().size();
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : vs) {
    if (v.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "mean_vector: ragged input");
    }
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
  }
  for (double& x : acc) x /= static_cast<double>(vs.size());
  return acc;
}

/// In-memory collection of embeddings with a fixed dimension D >= 1 and
/// unique utterance ids. Insertion validates finiteness and dimension.
class EmbeddingStore {
 public:
  void add(Embedding e) {
    if (e.vector.empty()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "embedding '" + e.utterance_id + "' has dimension 0");
    }
    if (!entries_.empty() && e.vector.size() != dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "embedding '" + e.utterance_id + "' has dimension " +
                      std::to_string(e.vector.size()) + ", store has " +
                      std::to_string(dim()));
    }
    for (double x : e.vector) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kOutOfRange,
                    "non-finite component in '" + e.utterance_id + "'");
      }
    }
    auto [it, inserted] = index_.emplace(e.utterance_id, entries_.size());
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + e.utterance_id + "'");
    }
    entries_.push_back(std::move(e));
  }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }

  const Embedding& get(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw Error(ErrorCode::kMissingEmbedding, "no embedding for '" + id + "'");
    }
    return entries_[it->second];
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().vector.size(); }
  const std::vector<Embedding>& entries() const { return entries_; }

 private:
  std::vector<Embedding> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sverify
