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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sverify/asnorm.hpp"
#include "sverify/embedding.hpp"
#include "sverify/error.hpp"
#include "sverify/parallel.hpp"
#include "sverify/qmf.hpp"
#include "sverify/scoring.hpp"
#include "sverify/segmentation.hpp"
#include "sverify/synth.hpp"

namespace sverify {

/// Windowing profile for CMF segmentation (frames at 100 frames/s).
struct SegmentationConfig {
  std::int64_t window = 400;
  std::int64_t min_segments = 2;
  std::int64_t window_min = 100;
};

struct UtteranceAnalysis {
  Embedding whole;
  double cmf_value = 0.0;
};

/// Whole-utterance embedding plus the CMF of its segment embeddings.
inline UtteranceAnalysis analyze_utterance(const FrameMatrix& frames,
                                           const ToyEmbedder& embedder,
                                           const SegmentationConfig& seg) {
  UtteranceAnalysis out;
  out.whole = embedder.embed_all(frames);
  const SegmentPlan plan = plan_segments(frames.n_frames, seg.window,
                                         seg.min_segments, seg.window_min);
  std::vector<Embedding> segments;
  segments.reserve(plan.ranges.size());
  for (const FrameRange& r : plan.ranges) {
    segments.push_back(embedder.embed(frames, r.start, r.end));
  }
  out.cmf_value = cmf(segments);
  return out;
}

/// Speaker-averaged cohort from a metadata listing over a store.
inline Cohort build_cohort_from(const EmbeddingStore& store,
                                const std::vector<CorpusUtterance>& meta,
                                int top_k) {
  std::vector<std::pair<SpeakerLabel, Embedding>> labeled;
  labeled.reserve(meta.size());
  for (const CorpusUtterance& u : meta) {
    labeled.emplace_back(u.speaker, store.get(u.utterance_id));
  }
  return build_cohort(labeled, top_k);
}

/// Cohort statistics for every entry of a store, keyed by utterance id.
inline StatsMap compute_cohort_stats(const EmbeddingStore& store,
                                     const Cohort& cohort, int threads) {
  const auto& entries = store.entries();
  std::vector<CohortStats> stats(entries.size());
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    stats[i] = cohort_stats(entries[i], cohort);
  });
  StatsMap map;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    map.emplace(entries[i].utterance_id, stats[i]);
  }
  return map;
}

/// Applies symmetric AS-Norm to one score column.
inline std::vector<double> asnorm_scores(const TrialList& trials,
                                         const std::vector<double>& scores,
                                         const StatsMap& stats) {
  if (trials.size() != scores.size()) {
    throw Error(ErrorCode::kTrialMismatch, "score/trial count mismatch");
  }
  auto stats_of = [&](const std::string& id) -> const CohortStats& {
    auto it = stats.find(id);
    if (it == stats.end()) {
      throw Error(ErrorCode::kMissingEmbedding, "no cohort stats for '" + id + "'");
    }
    return it->second;
  };
  std::vector<double> out(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    out[i] = asnorm_score(scores[i], stats_of(trials[i].enroll_id),
                          stats_of(trials[i].test_id));
  }
  return out;
}

// ---------------------------------------------------------------------------
// QMF training over sampled, possibly clipped trials
// ---------------------------------------------------------------------------

/// Supplies the frames of an utterance by id (from a loaded file, or by
/// regenerating a synthetic corpus on demand).
using FrameSource = std::function<FrameMatrix(const std::string&)>;

inline FrameSource frame_source_from(const std::vector<FrameMatrix>& corpus) {
  auto index = std::make_shared<std::unordered_map<std::string, std::size_t>>();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!index->emplace(corpus[i].utterance_id, i).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate utterance '" + corpus[i].utterance_id + "'");
    }
  }
  return [&corpus, index](const std::string& id) -> FrameMatrix {
    auto it = index->find(id);
    if (it == index->end()) {
      throw Error(ErrorCode::kMissingEmbedding, "no frames for '" + id + "'");
    }
    return corpus[it->second];
  };
}

struct QmfTrainingData {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
};

struct QmfPipelineConfig {
  SegmentationConfig segmentation;
  bool use_cmf = true;        // scale the trial score by both sides' CMFs
  bool log_transform = true;  // ln on durations and magnitudes
  int threads = 1;
};

/// Realizes every trial side (truncating short sides to their clip length),
/// scores each trial through the CMF + AS-Norm chain against the given
/// cohort, and assembles the quality-feature matrix for the calibrator.
inline QmfTrainingData build_qmf_training_data(const std::vector<QmfTrial>& trials,
                                               const FrameSource& frames_of,
                                               const ToyEmbedder& embedder,
                                               const Cohort& cohort,
                                               const QmfPipelineConfig& config) {
  if (trials.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no trials to build features for");
  }

  // Unique (utterance, clip) realizations, grouped by source utterance so
  // frames are fetched once per utterance.
  struct Realization {
    std::string source_id;
    std::int64_t clip_frames = 0;  // 0 = full length
    std::string realized_id;
  };
  std::vector<Realization> realizations;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> realization_index;
  auto realized_id_of = [&](const std::string& id, double clip_s) {
    const std::int64_t clip_frames =
        clip_s > 0.0 ? static_cast<std::int64_t>(std::llround(
                           clip_s * kFramesPerSecond))
                     : 0;
    const auto key = std::make_pair(id, clip_frames);
    auto it = realization_index.find(key);
    if (it == realization_index.end()) {
      Realization r;
      r.source_id = id;
      r.clip_frames = clip_frames;
      r.realized_id =
          clip_frames == 0 ? id : id + "#c" + std::to_string(clip_frames);
      it = realization_index.emplace(key, realizations.size()).first;
      realizations.push_back(std::move(r));
    }
    return realizations[it->second].realized_id;
  };

  TrialList realized_trials;
  realized_trials.reserve(trials.size());
  for (const QmfTrial& qt : trials) {
    if (!qt.trial.target.has_value()) {
      throw Error(ErrorCode::kSingleClass, "training trial without a label");
    }
    Trial t;
    t.enroll_id = realized_id_of(qt.trial.enroll_id, qt.enroll_clip_s);
    t.test_id = realized_id_of(qt.trial.test_id, qt.test_clip_s);
    t.target = qt.trial.target;
    realized_trials.push_back(std::move(t));
  }

  // Group realizations by source utterance.
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < realizations.size(); ++i) {
    by_source[realizations[i].source_id].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> groups;
  groups.reserve(by_source.size());
  std::vector<std::string> group_ids;
  for (const auto& [id, group] : by_source) {
    groups.push_back(&group);
    group_ids.push_back(id);
  }

  std::vector<UtteranceAnalysis> analyses(realizations.size());
  parallel_for(groups.size(), config.threads, [&](std::size_t g) {
    FrameMatrix frames = frames_of(group_ids[g]);
    for (std::size_t r : *groups[g]) {
      if (realizations[r].clip_frames == 0) {
        analyses[r] = analyze_utterance(frames, embedder, config.segmentation);
      } else {
        if (realizations[r].clip_frames > frames.n_frames) {
          throw Error(ErrorCode::kRangeOutOfBounds,
                      "clip longer than source '" + group_ids[g] + "'");
        }
        FrameMatrix clipped;
        clipped.utterance_id = realizations[r].realized_id;
        clipped.speaker = frames.speaker;
        clipped.dim = frames.dim;
        clipped.n_frames = realizations[r].clip_frames;
        clipped.frames.assign(
            frames.frames.begin(),
            frames.frames.begin() +
                static_cast<std::size_t>(clipped.n_frames) * clipped.dim);
        analyses[r] = analyze_utterance(clipped, embedder, config.segmentation);
      }
      analyses[r].whole.utterance_id = realizations[r].realized_id;
    }
  });

  EmbeddingStore store;
  CmfMap cmfs;
  DurationMap durations;
  for (std::size_t r = 0; r < realizations.size(); ++r) {
    cmfs.emplace(realizations[r].realized_id, analyses[r].cmf_value);
    durations.emplace(realizations[r].realized_id,
                      analyses[r].whole.duration_s);
    store.add(std::move(analyses[r].whole));
  }

  const StatsMap stats = compute_cohort_stats(store, cohort, config.threads);

  ScoreTable table =
      score_trials(realized_trials, store, config.use_cmf ? &cmfs : nullptr);
  const std::vector<double>& trial_scores =
      table.column(config.use_cmf ? "cmf" : "raw");
  const std::vector<double> normed =
      asnorm_scores(realized_trials, trial_scores, stats);

  QmfTrainingData data;
  data.feature_names = qmf_feature_names(config.log_transform);
  data.features.reserve(realized_trials.size());
  data.labels.reserve(realized_trials.size());
  for (std::size_t i = 0; i < realized_trials.size(); ++i) {
    const QmfFeatures f =
        build_features(realized_trials[i], normed[i], store, stats, durations,
                       config.log_transform);
    const auto arr = f.as_array();
    data.features.emplace_back(arr.begin(), arr.end());
    data.labels.push_back(*realized_trials[i].target ? 1 : 0);
  }
  return data;
}

/// Applies a trained calibrator to a scored trial list.
inline std::vector<double> apply_qmf_to_trials(
    const QmfModel& model, const TrialList& trials,
    const std::vector<double>& scores, const EmbeddingStore& embeddings,
    const StatsMap& stats, const DurationMap& durations) {
  if (trials.size() != scores.size()) {
    throw Error(ErrorCode::kTrialMismatch, "score/trial count mismatch");
  }
  const bool log_transform = model.feature_names == qmf_feature_names(true);
  if (!log_transform && model.feature_names != qmf_feature_names(false)) {
    throw Error(ErrorCode::kParseError, "unrecognized QMF feature layout");
  }
  std::vector<double> out(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const QmfFeatures f = build_features(trials[i], scores[i], embeddings,
                                         stats, durations, log_transform);
    out[i] = apply_qmf(model, f);
  }
  return out;
}

}  // namespace sverify
