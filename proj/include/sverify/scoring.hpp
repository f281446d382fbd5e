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

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sverify/embedding.hpp"
#include "sverify/error.hpp"

namespace sverify {

struct Trial {
  std::string enroll_id;
  std::string test_id;
  std::optional<bool> target;  // true = same speaker, unset = unlabeled
};

using TrialList = std::vector<Trial>;

/// Per-trial score columns through the pipeline stages. Every column is
/// aligned index-for-index with `trials`.
struct ScoreTable {
  TrialList trials;
  std::map<std::string, std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) {
      throw Error(ErrorCode::kOutOfRange, "no score column '" + name + "'");
    }
    return it->second;
  }
};

/// Cosine score of two whole-utterance embeddings.
inline double raw_score(const Embedding& enroll, const Embedding& test) {
  return cosine(enroll.vector, test.vector);
}

/// Scales a raw cosine score by the CMF of each side.
inline double cmf_calibrated_score(double cmf_a, double cmf_b, double raw) {
  if (cmf_a < 0.0 || cmf_a > 1.0 || cmf_b < 0.0 || cmf_b > 1.0) {
    throw Error(ErrorCode::kOutOfRange, "CMF outside [0,1]");
  }
  if (raw < -1.0 || raw > 1.0) {
    throw Error(ErrorCode::kOutOfRange, "raw score outside [-1,1]");
  }
  return cmf_a * cmf_b * raw;
}

using CmfMap = std::unordered_map<std::string, double>;

/// Scores every trial against the store. The result always carries a `raw`
/// column; when a CMF map is supplied a `cmf` column is added. CMFs are
/// looked up once per utterance, never recomputed per trial.
inline ScoreTable score_trials(const TrialList& trials,
                               const EmbeddingStore& embeddings,
                               const CmfMap* cmfs = nullptr) {
  ScoreTable table;
  table.trials = trials;
  auto& raw = table.columns["raw"];
  raw.resize(trials.size());

  auto cmf_of = [&](const std::string& id) {
    auto it = cmfs->find(id);
    if (it == cmfs->end()) {
      throw Error(ErrorCode::kMissingCmf, "no CMF for '" + id + "'");
    }
    return it->second;
  };

  std::vector<double>* cmf_col = nullptr;
  if (cmfs != nullptr) {
    cmf_col = &table.columns["cmf"];
    cmf_col->resize(trials.size());
  }
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Embedding& e = embeddings.get(trials[i].enroll_id);
    const Embedding& t = embeddings.get(trials[i].test_id);
    raw[i] = raw_score(e, t);
    if (cmf_col != nullptr) {
      (*cmf_col)[i] = cmf_calibrated_score(cmf_of(trials[i].enroll_id),
                                           cmf_of(trials[i].test_id), raw[i]);
    }
  }
  return table;
}

}  // namespace sverify
