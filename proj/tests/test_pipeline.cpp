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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "sverify/parallel.hpp"
#include "sverify/pipeline.hpp"
#include "sverify/synth.hpp"

using namespace sverify;

namespace {

SynthSpec pipeline_spec() {
  SynthSpec spec;
  spec.n_speakers = 8;
  spec.utts_per_speaker = 4;
  spec.dim = 20;
  spec.min_frames = 250;
  spec.max_frames = 900;
  spec.noise_scale = 0.25;
  spec.seed = 31337;
  return spec;
}

}  // namespace

TEST_CASE("parallel_for output does not depend on the worker count") {
  std::vector<double> one(1000);
  std::vector<double> four(1000);
  auto work = [](std::size_t i) {
    double acc = 0.0;
    for (int k = 1; k < 50; ++k) acc += std::sin(static_cast<double>(i * k));
    return acc;
  };
  parallel_for(one.size(), 1, [&](std::size_t i) { one[i] = work(i); });
  parallel_for(four.size(), 4, [&](std::size_t i) { four[i] = work(i); });
  CHECK(one == four);
}

TEST_CASE("parallel_for propagates worker exceptions") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 63) {
                                   throw Error(ErrorCode::kOutOfRange, "boom");
                                 }
                               }),
                  Error);
}

TEST_CASE("analyze_utterance matches its parts") {
  const auto spec = pipeline_spec();
  const auto fm = generate_utterance(spec, 1, 2);
  const ToyEmbedder embedder(9, spec.dim, 32);
  const SegmentationConfig seg{400, 2, 100};

  const auto analysis = analyze_utterance(fm, embedder, seg);
  CHECK(analysis.whole.vector == embedder.embed_all(fm).vector);

  const auto plan =
      plan_segments(fm.n_frames, seg.window, seg.min_segments, seg.window_min);
  std::vector<Embedding> segments;
  for (const auto& r : plan.ranges) {
    segments.push_back(embedder.embed(fm, r.start, r.end));
  }
  CHECK(analysis.cmf_value == cmf(segments));
}

TEST_CASE("compute_cohort_stats agrees with direct cohort_stats") {
  const auto spec = pipeline_spec();
  const auto corpus = generate_corpus(spec);
  const ToyEmbedder embedder(9, spec.dim, 32);

  EmbeddingStore store;
  std::vector<CorpusUtterance> meta;
  for (const auto& fm : corpus) {
    store.add(embedder.embed_all(fm));
    meta.push_back({fm.utterance_id, fm.speaker, fm.duration_s()});
  }
  const Cohort cohort = build_cohort_from(store, meta, 5);
  const StatsMap stats = compute_cohort_stats(store, cohort, 3);
  REQUIRE(stats.size() == store.size());
  for (const auto& e : store.entries()) {
    const CohortStats direct = cohort_stats(e, cohort);
    CHECK(stats.at(e.utterance_id).mean == direct.mean);
    CHECK(stats.at(e.utterance_id).std == direct.std);
  }
}

TEST_CASE("asnorm_scores equals per-trial asnorm_score") {
  StatsMap stats;
  stats["a"] = {0.1, 0.2, 0.1};
  stats["b"] = {0.3, 0.4, 0.3};
  stats["c"] = {-0.2, 0.5, -0.2};
  TrialList trials{{"a", "b", {}}, {"b", "c", {}}, {"c", "a", {}}};
  const std::vector<double> raw{0.5, -0.25, 0.75};
  const auto normed = asnorm_scores(trials, raw, stats);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(normed[i] == asnorm_score(raw[i], stats.at(trials[i].enroll_id),
                                    stats.at(trials[i].test_id)));
  }
  CHECK_THROWS_AS(asnorm_scores(trials, {0.5}, stats), Error);
}

TEST_CASE("build_qmf_training_data realizes clips and matches a hand recomputation") {
  auto spec = pipeline_spec();
  spec.min_frames = 300;
  spec.max_frames = 1200;
  const auto corpus = generate_corpus(spec);
  const ToyEmbedder embedder(9, spec.dim, 32);

  EmbeddingStore whole_store;
  std::vector<CorpusUtterance> meta;
  std::vector<std::pair<SpeakerLabel, Embedding>> labeled;
  for (const auto& fm : corpus) {
    Embedding e = embedder.embed_all(fm);
    labeled.emplace_back(fm.speaker, e);
    whole_store.add(std::move(e));
    meta.push_back({fm.utterance_id, fm.speaker, fm.duration_s()});
  }
  const Cohort cohort = build_cohort(labeled, 6);

  SamplerSpec sampler;
  sampler.pairs_per_condition = 20;
  const auto trials = sample_trials(meta, sampler, 11);
  REQUIRE(trials.size() == 60);

  QmfPipelineConfig config;
  config.segmentation = {400, 2, 100};
  config.threads = 2;
  const QmfTrainingData data = build_qmf_training_data(
      trials, frame_source_from(corpus), embedder, cohort, config);
  REQUIRE(data.features.size() == 60);
  REQUIRE(data.labels.size() == 60);
  CHECK(data.feature_names == qmf_feature_names(true));
  for (const auto& row : data.features) {
    REQUIRE(row.size() == 7);
    for (double x : row) CHECK(std::isfinite(x));
  }

  // Recompute one long-short trial by hand, straight from the frames.
  const std::size_t index = 45;  // long-short block
  const QmfTrial& qt = trials[index];
  REQUIRE(qt.test_clip_s > 0.0);
  REQUIRE(qt.enroll_clip_s == 0.0);

  const auto find_frames = [&](const std::string& id) -> const FrameMatrix& {
    for (const auto& fm : corpus) {
      if (fm.utterance_id == id) return fm;
    }
    FAIL("missing utterance");
    return corpus.front();
  };
  const FrameMatrix& enroll_frames = find_frames(qt.trial.enroll_id);
  FrameMatrix clipped = find_frames(qt.trial.test_id);
  clipped.n_frames = static_cast<std::int64_t>(std::llround(
      qt.test_clip_s * kFramesPerSecond));
  clipped.frames.resize(static_cast<std::size_t>(clipped.n_frames) *
                        clipped.dim);

  const auto enroll = analyze_utterance(enroll_frames, embedder, config.segmentation);
  const auto test = analyze_utterance(clipped, embedder, config.segmentation);
  const double raw = cosine(enroll.whole.vector, test.whole.vector);
  const double scaled =
      cmf_calibrated_score(enroll.cmf_value, test.cmf_value, raw);
  const CohortStats enroll_stats = cohort_stats(enroll.whole, cohort);
  const CohortStats test_stats = cohort_stats(test.whole, cohort);
  const double normed = asnorm_score(scaled, enroll_stats, test_stats);

  const auto& row = data.features[index];
  CHECK(row[0] == Catch::Approx(normed).margin(1e-12));
  CHECK(row[1] == Catch::Approx(std::log(enroll_frames.duration_s())).margin(1e-12));
  CHECK(row[2] == Catch::Approx(std::log(qt.test_clip_s)).margin(1e-12));
  CHECK(row[3] == Catch::Approx(enroll_stats.imposter_mean).margin(1e-12));
  CHECK(row[4] == Catch::Approx(test_stats.imposter_mean).margin(1e-12));
  CHECK(row[5] == Catch::Approx(std::log(norm(enroll.whole.vector))).margin(1e-12));
  CHECK(row[6] == Catch::Approx(std::log(norm(test.whole.vector))).margin(1e-12));
  CHECK(data.labels[index] == (*qt.trial.target ? 1 : 0));
}

TEST_CASE("apply_qmf_to_trials equals manual feature application") {
  EmbeddingStore store;
  store.add({"a", {3.0, 4.0}, 0.0});
  store.add({"b", {1.0, 1.0}, 0.0});
  StatsMap stats;
  stats["a"] = {0.2, 0.1, 0.2};
  stats["b"] = {0.4, 0.2, 0.4};
  DurationMap durations{{"a", 4.0}, {"b", 8.0}};

  QmfModel model;
  model.feature_names = qmf_feature_names(true);
  model.weights = {1.0, 0.5, -0.5, 0.2, 0.2, 0.1, 0.1};
  model.bias = 0.125;
  model.feature_means.assign(7, 0.0);
  model.feature_stds.assign(7, 1.0);

  TrialList trials{{"a", "b", {}}};
  const std::vector<double> scores{1.75};
  const auto out = apply_qmf_to_trials(model, trials, scores, store, stats, durations);
  REQUIRE(out.size() == 1);
  const QmfFeatures f =
      build_features(trials[0], scores[0], store, stats, durations, true);
  CHECK(out[0] == apply_qmf(model, f));
}
