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
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sverify/asnorm.hpp"
#include "sverify/embedding.hpp"
#include "sverify/error.hpp"
#include "sverify/rng.hpp"
#include "sverify/scoring.hpp"

namespace sverify {

/// One corpus row: who spoke the utterance and for how long.
struct CorpusUtterance {
  std::string utterance_id;
  SpeakerLabel speaker;
  double duration_s = 0.0;
};

// ---------------------------------------------------------------------------
// Training-trial sampler
// ---------------------------------------------------------------------------

/// Duration-bucketed sampling plan for the calibration training trials.
struct SamplerSpec {
  double long_threshold_s = 5.0;
  double short_clip_lo_s = 2.0;
  double short_clip_hi_s = 5.0;
  int pairs_per_condition = 10000;
  double target_ratio = 0.5;
};

/// A sampled trial. A nonzero clip duration marks that side as short audio,
/// to be realized by truncating the source frames to that length.
struct QmfTrial {
  Trial trial;
  double enroll_clip_s = 0.0;
  double test_clip_s = 0.0;
};

namespace detail {

struct SamplerBuckets {
  // Indices into the corpus, grouped by speaker (sorted ids), per bucket.
  std::vector<std::vector<std::size_t>> long_by_speaker;
  std::vector<std::vector<std::size_t>> short_by_speaker;
  std::vector<std::size_t> long_all;
  std::vector<std::size_t> short_all;
};

enum class Side { kLong, kShort };

}  // namespace detail

/// Samples the three duration conditions (short-short, long-long,
/// long-short), each at the configured pair count and target ratio,
/// deterministically for a given seed. Short sides get a clip duration
/// drawn uniformly from the configured range (capped by the source
/// duration) and quantized to whole frames at 100 frames/s.
///
/// When a bucket cannot supply the requested counts the condition is scaled
/// down proportionally and a note is appended to `warnings` (if given).
inline std::vector<QmfTrial> sample_trials(
    const std::vector<CorpusUtterance>& corpus, const SamplerSpec& spec,
    std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  if (spec.short_clip_lo_s <= 0.0 ||
      spec.short_clip_lo_s >= spec.short_clip_hi_s ||
      spec.short_clip_hi_s > spec.long_threshold_s) {
    throw Error(ErrorCode::kInvalidSpec, "bad short clip range");
  }
  if (spec.target_ratio <= 0.0 || spec.target_ratio >= 1.0) {
    throw Error(ErrorCode::kInvalidSpec, "target_ratio must lie in (0,1)");
  }
  if (spec.pairs_per_condition <= 0) {
    throw Error(ErrorCode::kInvalidSpec, "pairs_per_condition must be positive");
  }

  // Group corpus indices by speaker, speakers ordered by id.
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_speaker[corpus[i].speaker.speaker_id].push_back(i);
  }
  if (by_speaker.size() < 2) {
    throw Error(ErrorCode::kInsufficientSpeakers,
                "sampling needs at least 2 speakers");
  }

  detail::SamplerBuckets buckets;
  for (const auto& [speaker, utts] : by_speaker) {
    std::vector<std::size_t> longs;
    std::vector<std::size_t> shorts;
    for (std::size_t i : utts) {
      if (corpus[i].duration_s > spec.long_threshold_s) longs.push_back(i);
      if (corpus[i].duration_s >= spec.short_clip_lo_s) shorts.push_back(i);
    }
    buckets.long_all.insert(buckets.long_all.end(), longs.begin(), longs.end());
    buckets.short_all.insert(buckets.short_all.end(), shorts.begin(),
                             shorts.end());
    buckets.long_by_speaker.push_back(std::move(longs));
    buckets.short_by_speaker.push_back(std::move(shorts));
  }
  if (buckets.long_all.empty()) {
    throw Error(ErrorCode::kEmptyBucket, "no utterance longer than threshold");
  }
  if (buckets.short_all.empty()) {
    throw Error(ErrorCode::kEmptyBucket, "no utterance usable as short audio");
  }

  std::mt19937_64 rng(mix64(seed, 0x71f5u));

  const auto bucket_of = [&](detail::Side side, std::size_t speaker)
      -> const std::vector<std::size_t>& {
    return side == detail::Side::kLong ? buckets.long_by_speaker[speaker]
                                       : buckets.short_by_speaker[speaker];
  };
  const auto pool_of =
      [&](detail::Side side) -> const std::vector<std::size_t>& {
    return side == detail::Side::kLong ? buckets.long_all : buckets.short_all;
  };

  std::vector<QmfTrial> out;
  const char* condition_names[3] = {"short-short", "long-long", "long-short"};
  const detail::Side condition_sides[3][2] = {
      {detail::Side::kShort, detail::Side::kShort},
      {detail::Side::kLong, detail::Side::kLong},
      {detail::Side::kShort, detail::Side::kLong}};

  for (int cond = 0; cond < 3; ++cond) {
    const detail::Side enroll_side = condition_sides[cond][1];
    const detail::Side test_side = condition_sides[cond][0];
    const bool symmetric = enroll_side == test_side;

    // Enumerate every same-speaker candidate pair for the target half.
    std::vector<std::pair<std::size_t, std::size_t>> target_pool;
    for (std::size_t s = 0; s < buckets.long_by_speaker.size(); ++s) {
      const auto& a_side = bucket_of(enroll_side, s);
      const auto& b_side = bucket_of(test_side, s);
      for (std::size_t a : a_side) {
        for (std::size_t b : b_side) {
          if (a == b) continue;
          if (symmetric && a > b) continue;  // unordered within one bucket
          target_pool.emplace_back(a, b);
        }
      }
    }

    // Ordered cross-speaker pair count per bucket combination.
    auto nontarget_pool_size = [&]() -> std::uint64_t {
      std::uint64_t total = 0;
      const std::uint64_t n_enroll = pool_of(enroll_side).size();
      const std::uint64_t n_test = pool_of(test_side).size();
      total = n_enroll * n_test;
      for (std::size_t s = 0; s < buckets.long_by_speaker.size(); ++s) {
        total -= static_cast<std::uint64_t>(bucket_of(enroll_side, s).size()) *
                 static_cast<std::uint64_t>(bucket_of(test_side, s).size());
      }
      return total;
    }();

    const std::uint64_t req_target = static_cast<std::uint64_t>(std::llround(
        spec.pairs_per_condition * spec.target_ratio));
    const std::uint64_t req_nontarget =
        static_cast<std::uint64_t>(spec.pairs_per_condition) - req_target;
    if (req_target == 0 || req_nontarget == 0) {
      throw Error(ErrorCode::kInvalidSpec,
                  "pairs_per_condition too small for the target ratio");
    }

    double scale = 1.0;
    scale = std::min(scale, static_cast<double>(target_pool.size()) /
                                static_cast<double>(req_target));
    scale = std::min(scale, static_cast<double>(nontarget_pool_size) /
                                static_cast<double>(req_nontarget));
    const std::uint64_t n_target =
        static_cast<std::uint64_t>(req_target * scale);
    const std::uint64_t n_nontarget =
        static_cast<std::uint64_t>(req_nontarget * scale);
    if (scale < 1.0 && warnings != nullptr) {
      warnings->push_back(std::string(condition_names[cond]) +
                          ": bucket too small, scaled to " +
                          std::to_string(n_target) + " target / " +
                          std::to_string(n_nontarget) + " nontarget pairs");
    }
    if (n_target == 0 || n_nontarget == 0) {
      throw Error(ErrorCode::kEmptyBucket,
                  std::string("cannot sample any ") + condition_names[cond] +
                      " pairs");
    }

    shuffle(target_pool, rng);

    auto clip_for = [&](std::size_t utt_index) {
      const double duration = corpus[utt_index].duration_s;
      const double hi = std::min(spec.short_clip_hi_s, duration);
      const double drawn = uniform_real(rng, spec.short_clip_lo_s, hi);
      // Quantize to whole frames so the realized embedding and the duration
      // feature agree exactly; never exceed the source audio.
      auto frames = static_cast<std::int64_t>(std::llround(drawn * 100.0));
      frames = std::clamp(
          frames,
          static_cast<std::int64_t>(std::ceil(spec.short_clip_lo_s * 100.0)),
          static_cast<std::int64_t>(std::floor(duration * 100.0)));
      return static_cast<double>(frames) / 100.0;
    };

    auto emit = [&](std::size_t enroll_index, std::size_t test_index,
                    bool target) {
      QmfTrial qt;
      qt.trial.enroll_id = corpus[enroll_index].utterance_id;
      qt.trial.test_id = corpus[test_index].utterance_id;
      qt.trial.target = target;
      if (enroll_side == detail::Side::kShort) {
        qt.enroll_clip_s = clip_for(enroll_index);
      }
      if (test_side == detail::Side::kShort) {
        qt.test_clip_s = clip_for(test_index);
      }
      out.push_back(std::move(qt));
    };

    for (std::uint64_t i = 0; i < n_target; ++i) {
      emit(target_pool[i].first, target_pool[i].second, true);
    }

    // Nontargets by rejection sampling; the cross-speaker pool is far larger
    // than the request so collisions stay rare.
    std::set<std::pair<std::size_t, std::size_t>> seen;
    const auto& enroll_pool = pool_of(enroll_side);
    const auto& test_pool = pool_of(test_side);
    std::uint64_t emitted = 0;
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = 1000 * n_nontarget + 1000;
    while (emitted < n_nontarget && attempts < max_attempts) {
      ++attempts;
      const std::size_t a = enroll_pool[bounded(rng, enroll_pool.size())];
      const std::size_t b = test_pool[bounded(rng, test_pool.size())];
      if (corpus[a].speaker.speaker_id == corpus[b].speaker.speaker_id) {
        continue;
      }
      if (!seen.emplace(a, b).second) continue;
      emit(a, b, false);
      ++emitted;
    }
    if (emitted < n_nontarget && warnings != nullptr) {
      warnings->push_back(std::string(condition_names[cond]) +
                          ": nontarget sampling exhausted at " +
                          std::to_string(emitted));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quality features
// ---------------------------------------------------------------------------

/// Fixed-order quality feature vector fed to the calibrator. Field order is
/// the contract between build_features, the trainer and the model file.
struct QmfFeatures {
  double score = 0.0;
  double log_dur_enroll = 0.0;
  double log_dur_test = 0.0;
  double imposter_mean_enroll = 0.0;
  double imposter_mean_test = 0.0;
  double log_mag_enroll = 0.0;
  double log_mag_test = 0.0;

  std::array<double, 7> as_array() const {
    return {score,
            log_dur_enroll,
            log_dur_test,
            imposter_mean_enroll,
            imposter_mean_test,
            log_mag_enroll,
            log_mag_test};
  }
};

inline std::vector<std::string> qmf_feature_names(bool log_transform) {
  if (log_transform) {
    return {"score",
            "log_dur_enroll",
            "log_dur_test",
            "imposter_mean_enroll",
            "imposter_mean_test",
            "log_mag_enroll",
            "log_mag_test"};
  }
  return {"score",      "dur_enroll", "dur_test", "imposter_mean_enroll",
          "imposter_mean_test", "mag_enroll", "mag_test"};
}

using DurationMap = std::map<std::string, double>;

/// Assembles the quality features for one scored trial. Durations and
/// imposter means are looked up by utterance id; `log_transform` switches
/// the duration and magnitude fields between ln(x) and x.
inline QmfFeatures build_features(const Trial& trial, double score,
                                  const EmbeddingStore& embeddings,
                                  const StatsMap& stats,
                                  const DurationMap& durations,
                                  bool log_transform = true) {
  auto duration_of = [&](const std::string& id) {
    auto it = durations.find(id);
    if (it == durations.end()) {
      throw Error(ErrorCode::kMissingEmbedding, "no duration for '" + id + "'");
    }
    if (it->second <= 0.0) {
      throw Error(ErrorCode::kNonpositiveDuration,
                  "duration of '" + id + "' is " + std::to_string(it->second));
    }
    return it->second;
  };
  auto stats_of = [&](const std::string& id) -> const CohortStats& {
    auto it = stats.find(id);
    if (it == stats.end()) {
      throw Error(ErrorCode::kMissingEmbedding,
                  "no cohort stats for '" + id + "'");
    }
    return it->second;
  };
  auto mag_of = [&](const std::string& id) {
    const double m = magnitude(embeddings.get(id));
    if (m < kZeroNormEps) {
      throw Error(ErrorCode::kZeroVector, "zero-magnitude embedding '" + id + "'");
    }
    return m;
  };

  const double dur_e = duration_of(trial.enroll_id);
  const double dur_t = duration_of(trial.test_id);
  const double mag_e = mag_of(trial.enroll_id);
  const double mag_t = mag_of(trial.test_id);

  QmfFeatures f;
  f.score = score;
  f.log_dur_enroll = log_transform ? std::log(dur_e) : dur_e;
  f.log_dur_test = log_transform ? std::log(dur_t) : dur_t;
  f.imposter_mean_enroll = stats_of(trial.enroll_id).imposter_mean;
  f.imposter_mean_test = stats_of(trial.test_id).imposter_mean;
  f.log_mag_enroll = log_transform ? std::log(mag_e) : mag_e;
  f.log_mag_test = log_transform ? std::log(mag_t) : mag_t;
  return f;
}

// ---------------------------------------------------------------------------
// Logistic-regression calibrator
// ---------------------------------------------------------------------------

/// Logistic-regression calibration model with standardization baked in. The
/// output of apply_qmf is the logit, not the probability: metrics only need
/// a monotone score and the logit keeps resolution at the tails.
struct QmfModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;

  std::size_t feature_count() const { return weights.size(); }
};

struct LrConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2_lambda = 1e-4;
  std::uint64_t seed = 0;  // reserved; full-batch training needs no draws
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

inline double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

/// Mean regularized logistic loss of (weights, bias) on standardized rows.
inline double lr_loss(const std::vector<std::vector<double>>& rows,
                      const std::vector<int>& labels,
                      const std::vector<double>& weights, double bias,
                      double l2_lambda) {
  detail::KahanSum nll;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      z += weights[j] * rows[i][j];
    }
    nll.add(detail::softplus(z) - static_cast<double>(labels[i]) * z);
  }
  double reg = 0.0;
  for (double w : weights) reg += w * w;
  return nll.sum / static_cast<double>(rows.size()) + 0.5 * l2_lambda * reg;
}

/// Analytic gradient of lr_loss. The bias is not regularized.
inline void lr_gradient(const std::vector<std::vector<double>>& rows,
                        const std::vector<int>& labels,
                        const std::vector<double>& weights, double bias,
                        double l2_lambda, std::vector<double>* grad_weights,
                        double* grad_bias) {
  const std::size_t dim = weights.size();
  std::vector<detail::KahanSum> gw(dim);
  detail::KahanSum gb;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double z = bias;
    for (std::size_t j = 0; j < dim; ++j) z += weights[j] * rows[i][j];
    const double residual = sigmoid(z) - static_cast<double>(labels[i]);
    for (std::size_t j = 0; j < dim; ++j) gw[j].add(residual * rows[i][j]);
    gb.add(residual);
  }
  grad_weights->resize(dim);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t j = 0; j < dim; ++j) {
    (*grad_weights)[j] = gw[j].sum * inv_n + l2_lambda * weights[j];
  }
  *grad_bias = gb.sum * inv_n;
}

/// Trains the calibrator by full-batch gradient descent from a zero start.
/// Features are standardized with fitted mean/std (population), which is
/// stored in the model so it travels with the weights.
inline QmfModel train_lr(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, const LrConfig& config,
                         std::vector<std::string> feature_names = {}) {
  if (features.size() < 2 || features.size() != labels.size()) {
    throw Error(ErrorCode::kEmptyInput,
                "train_lr needs at least 2 labeled examples");
  }
  const std::size_t dim = features.front().size();
  if (dim == 0) throw Error(ErrorCode::kEmptyInput, "train_lr with no features");
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged feature rows");
    }
    for (double x : features[i]) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kOutOfRange, "non-finite feature value");
      }
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kOutOfRange, "labels must be 0 or 1");
    }
    (labels[i] == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::kSingleClass, "training data has a single class");
  }

  QmfModel model;
  model.feature_names = feature_names.empty()
                            ? std::vector<std::string>(dim, "")
                            : std::move(feature_names);
  if (model.feature_names.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "feature name count mismatch");
  }

  // Fit standardization (population std; constant features get std 1).
  model.feature_means.assign(dim, 0.0);
  model.feature_stds.assign(dim, 1.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (std::size_t j = 0; j < dim; ++j) {
    detail::KahanSum mean;
    for (const auto& row : features) mean.add(row[j]);
    model.feature_means[j] = mean.sum * inv_n;
    detail::KahanSum var;
    for (const auto& row : features) {
      const double d = row[j] - model.feature_means[j];
      var.add(d * d);
    }
    const double std = std::sqrt(var.sum * inv_n);
    model.feature_stds[j] = std < kDegenerateStdEps ? 1.0 : std;
  }

  std::vector<std::vector<double>> rows(features.size(),
                                        std::vector<double>(dim));
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      rows[i][j] =
          (features[i][j] - model.feature_means[j]) / model.feature_stds[j];
    }
  }

  model.weights.assign(dim, 0.0);
  model.bias = 0.0;
  std::vector<double> grad(dim);
  double grad_bias = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    lr_gradient(rows, labels, model.weights, model.bias, config.l2_lambda,
                &grad, &grad_bias);
    for (std::size_t j = 0; j < dim; ++j) {
      model.weights[j] -= config.learning_rate * grad[j];
      if (!std::isfinite(model.weights[j])) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "training diverged; lower the learning rate");
      }
    }
    model.bias -= config.learning_rate * grad_bias;
    if (!std::isfinite(model.bias)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "training diverged; lower the learning rate");
    }
  }
  if (!std::isfinite(
          lr_loss(rows, labels, model.weights, model.bias, config.l2_lambda))) {
    throw Error(ErrorCode::kNonFiniteLoss, "final loss is not finite");
  }
  return model;
}

/// The calibrated score: the LR logit over standardized features.
inline double apply_qmf(const QmfModel& model,
                        const std::vector<double>& features) {
  if (features.size() != model.feature_count()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model expects " + std::to_string(model.feature_count()) +
                    " features, got " + std::to_string(features.size()));
  }
  double z = model.bias;
  for (std::size_t j = 0; j < features.size(); ++j) {
    z += model.weights[j] * (features[j] - model.feature_means[j]) /
         model.feature_stds[j];
  }
  return z;
}

inline double apply_qmf(const QmfModel& model, const QmfFeatures& features) {
  const auto arr = features.as_array();
  return apply_qmf(model, std::vector<double>(arr.begin(), arr.end()));
}

}  // namespace sverify
