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
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "sverify/embedding.hpp"
#include "sverify/error.hpp"
#include "sverify/rng.hpp"

namespace sverify {

// Frame rate used to convert frame counts to seconds (10 ms shift).
inline constexpr int kFramesPerSecond = 100;

// Structure of the generator.
//
// Speaker latents live in a low-rank subspace (kSpeakerRank directions of
// the feature space), so different speakers overlap the way real voiceprint
// embeddings do: inter-speaker similarities spread widely instead of
// concentrating near zero, and an adaptive top-k cohort has actual "near"
// speakers to normalize against.
//
// Each utterance adds noise components scaled by noise_scale, each with its
// own lognormal per-utterance severity:
//   - a channel offset, constant over the utterance (kChannelScale x,
//     severity log-std kChannelSpread), which sets how far the utterance
//     strays from its speaker;
//   - a slow drift plus per-frame jitter (kDriftScale / kJitterScale x,
//     shared severity log-std kDriftSpread). The drift is piecewise
//     constant over kDriftBlockFrames-frame blocks, so it disperses
//     segment embeddings and averages out with duration: longer audio is
//     more reliable, and the dispersion is what the consistency factor
//     sees.
// Part of the drift is confined to a small subspace shared by every corpus
// (kArtifactRank directions, kArtifactScale x): the synthetic stand-in for
// channel and codec artifacts. Two degraded utterances can align inside
// that subspace and produce a spuriously high similarity, while
// speaker-averaged cohort embeddings cancel it, so per-utterance score
// normalization cannot see it; segment dispersion and embedding magnitude
// can.
//
// At noise_scale == speaker_scale the utterance noise swamps the speaker
// signal and scoring drops to near chance.
inline constexpr std::int64_t kDriftBlockFrames = 100;
inline constexpr int kSpeakerRank = 24;
inline constexpr double kChannelScale = 4.0;
inline constexpr double kChannelSpread = 0.35;
inline constexpr double kDriftScale = 3.0;
inline constexpr double kDriftSpread = 0.5;
inline constexpr double kJitterScale = 1.0;
inline constexpr int kArtifactRank = 4;
inline constexpr double kArtifactScale = 8.0;

/// Synthetic corpus layout: per-speaker latent directions with
/// within-speaker drift and per-frame jitter, all seeded.
struct SynthSpec {
  int n_speakers = 2;
  int utts_per_speaker = 1;
  int dim = 80;  // pseudo-feature dimension per frame
  std::int64_t min_frames = 200;
  std::int64_t max_frames = 1500;
  double speaker_scale = 1.0;
  double noise_scale = 0.3;
  std::uint64_t seed = 0;
};

/// One utterance's pseudo-feature frames (T x F, stored as f32 row-major).
struct FrameMatrix {
  std::string utterance_id;
  SpeakerLabel speaker;
  std::int64_t n_frames = 0;
  int dim = 0;
  std::vector<float> frames;  // n_frames * dim

  double duration_s() const {
    return static_cast<double>(n_frames) / kFramesPerSecond;
  }
  const float* row(std::int64_t t) const { return frames.data() + t * dim; }
};

inline void validate(const SynthSpec& spec) {
  if (spec.n_speakers < 2 || spec.utts_per_speaker < 1 || spec.dim < 2 ||
      spec.min_frames < 1 || spec.min_frames > spec.max_frames ||
      spec.noise_scale < 0.0 || spec.speaker_scale < 0.0) {
    throw Error(ErrorCode::kInvalidSpec, "invalid synthesis spec");
  }
}

inline std::string synth_speaker_id(int speaker_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%04d", speaker_index);
  return buf;
}

inline std::string synth_utterance_id(int speaker_index, int utt_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%04d_u%03d", speaker_index, utt_index);
  return buf;
}

/// The latent direction of one synthetic speaker: a random combination of
/// the corpus' shared rank-limited speaker basis, normalized so the
/// per-dimension variance stays speaker_scale^2.
inline std::vector<double> speaker_latent(const SynthSpec& spec,
                                          int speaker_index) {
  const int rank = std::min(kSpeakerRank, spec.dim);
  std::vector<double> coeffs(rank);
  {
    std::mt19937_64 rng(mix64(spec.seed, 0x5eedULL, speaker_index));
    for (double& c : coeffs) c = normal01(rng);
  }
  std::vector<double> latent(spec.dim, 0.0);
  const double scale = spec.speaker_scale / std::sqrt(static_cast<double>(rank));
  for (int k = 0; k < rank; ++k) {
    std::mt19937_64 rng(mix64(spec.seed, 0xba5eULL, k));
    for (int d = 0; d < spec.dim; ++d) {
      latent[d] += scale * coeffs[k] * normal01(rng);
    }
  }
  return latent;
}

/// Generates one utterance independently of all others: the draw stream is
/// keyed on (seed, speaker, utterance), so streaming generation and
/// generate_corpus produce bit-identical frames.
inline FrameMatrix generate_utterance(const SynthSpec& spec, int speaker_index,
                                      int utt_index) {
  validate(spec);
  const std::vector<double> latent = speaker_latent(spec, speaker_index);
  std::mt19937_64 rng(mix64(spec.seed, speaker_index, utt_index));

  FrameMatrix fm;
  fm.utterance_id = synth_utterance_id(speaker_index, utt_index);
  fm.speaker.speaker_id = synth_speaker_id(speaker_index);
  fm.dim = spec.dim;
  fm.n_frames = spec.min_frames +
                static_cast<std::int64_t>(bounded(
                    rng, static_cast<std::uint64_t>(spec.max_frames -
                                                    spec.min_frames + 1)));
  const double channel_noise =
      std::exp(kChannelSpread * normal01(rng)) * spec.noise_scale;
  const double drift_noise =
      std::exp(kDriftSpread * normal01(rng)) * spec.noise_scale;
  std::vector<double> channel(spec.dim);
  for (double& x : channel) x = kChannelScale * channel_noise * normal01(rng);
  const std::int64_t n_blocks =
      (fm.n_frames + kDriftBlockFrames - 1) / kDriftBlockFrames;
  std::vector<double> drift(static_cast<std::size_t>(n_blocks) * spec.dim);
  for (double& x : drift) x = kDriftScale * drift_noise * normal01(rng);

  // Artifact part of the drift: per-block weights on the shared basis.
  {
    const int rank = std::min(kArtifactRank, spec.dim);
    std::vector<double> basis(static_cast<std::size_t>(rank) * spec.dim);
    for (int k = 0; k < rank; ++k) {
      std::mt19937_64 basis_rng(mix64(0x417af4c7ULL, k));
      for (int d = 0; d < spec.dim; ++d) {
        basis[static_cast<std::size_t>(k) * spec.dim + d] = normal01(basis_rng);
      }
    }
    const double scale = kArtifactScale * drift_noise /
                         std::sqrt(static_cast<double>(rank));
    for (std::int64_t b = 0; b < n_blocks; ++b) {
      double* block = drift.data() + b * spec.dim;
      for (int k = 0; k < rank; ++k) {
        const double weight = scale * normal01(rng);
        const double* column = basis.data() + static_cast<std::size_t>(k) * spec.dim;
        for (int d = 0; d < spec.dim; ++d) block[d] += weight * column[d];
      }
    }
  }

  fm.frames.resize(static_cast<std::size_t>(fm.n_frames) * spec.dim);
  for (std::int64_t t = 0; t < fm.n_frames; ++t) {
    const double* block = drift.data() + (t / kDriftBlockFrames) * spec.dim;
    float* row = fm.frames.data() + t * spec.dim;
    for (int d = 0; d < spec.dim; ++d) {
      row[d] = static_cast<float>(latent[d] + channel[d] + block[d] +
                                  kJitterScale * drift_noise * normal01(rng));
    }
  }
  return fm;
}

/// Materializes the whole corpus, speaker-major then utterance order.
inline std::vector<FrameMatrix> generate_corpus(const SynthSpec& spec) {
  validate(spec);
  std::vector<FrameMatrix> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.n_speakers) *
                 spec.utts_per_speaker);
  for (int s = 0; s < spec.n_speakers; ++s) {
    for (int u = 0; u < spec.utts_per_speaker; ++u) {
      corpus.push_back(generate_utterance(spec, s, u));
    }
  }
  return corpus;
}

/// Statistics-pooling toy embedder: per-dimension mean and population
/// standard deviation over a frame range, sent through a fixed seeded
/// random projection. Output is intentionally not length-normalized; the
/// raw magnitude is consumed as a quality feature downstream.
class ToyEmbedder {
 public:
  ToyEmbedder(std::uint64_t projection_seed, int frame_dim, int out_dim)
      : frame_dim_(frame_dim), out_dim_(out_dim) {
    if (frame_dim < 1 || out_dim < 1) {
      throw Error(ErrorCode::kInvalidSpec, "embedder dims must be positive");
    }
    const int in_dim = 2 * frame_dim;
    projection_.resize(static_cast<std::size_t>(out_dim) * in_dim);
    std::mt19937_64 rng(mix64(projection_seed, frame_dim, out_dim));
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& p : projection_) p = scale * normal01(rng);
  }

  int out_dim() const { return out_dim_; }

  /// Mean and standard deviation pooled over frames [start, end), as one
  /// 2F vector (means first, then stds).
  std::vector<double> pool_stats(const FrameMatrix& frames, std::int64_t start,
                                 std::int64_t end) const {
    if (frames.dim != frame_dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "frame dim " + std::to_string(frames.dim) + ", embedder has " +
                      std::to_string(frame_dim_));
    }
    if (start < 0 || end > frames.n_frames || start >= end) {
      throw Error(ErrorCode::kRangeOutOfBounds,
                  "frame range [" + std::to_string(start) + "," +
                      std::to_string(end) + ") of " +
                      std::to_string(frames.n_frames));
    }
    const std::int64_t count = end - start;
    std::vector<double> stats(2 * frame_dim_, 0.0);
    for (std::int64_t t = start; t < end; ++t) {
      const float* row = frames.row(t);
      for (int d = 0; d < frame_dim_; ++d) stats[d] += row[d];
    }
    for (int d = 0; d < frame_dim_; ++d) stats[d] /= static_cast<double>(count);
    for (std::int64_t t = start; t < end; ++t) {
      const float* row = frames.row(t);
      for (int d = 0; d < frame_dim_; ++d) {
        const double diff = row[d] - stats[d];
        stats[frame_dim_ + d] += diff * diff;
      }
    }
    for (int d = 0; d < frame_dim_; ++d) {
      stats[frame_dim_ + d] =
          std::sqrt(stats[frame_dim_ + d] / static_cast<double>(count));
    }
    return stats;
  }

  Embedding embed(const FrameMatrix& frames, std::int64_t start,
                  std::int64_t end) const {
    const std::vector<double> stats = pool_stats(frames, start, end);
    Embedding e;
    e.utterance_id = frames.utterance_id;
    e.duration_s = static_cast<double>(end - start) / kFramesPerSecond;
    e.vector.resize(out_dim_);
    const int in_dim = 2 * frame_dim_;
    for (int o = 0; o < out_dim_; ++o) {
      const double* row = projection_.data() + static_cast<std::size_t>(o) * in_dim;
      double acc = 0.0;
      for (int i = 0; i < in_dim; ++i) acc += row[i] * stats[i];
      e.vector[o] = acc;
    }
    return e;
  }

  Embedding embed_all(const FrameMatrix& frames) const {
    return embed(frames, 0, frames.n_frames);
  }

 private:
  int frame_dim_;
  int out_dim_;
  std::vector<double> projection_;
};

/// One-shot form of the embedder for callers that do not batch.
inline Embedding toy_embed(const FrameMatrix& frames, std::int64_t start,
                           std::int64_t end, std::uint64_t projection_seed,
                           int dim_out) {
  return ToyEmbedder(projection_seed, frames.dim, dim_out)
      .embed(frames, start, end);
}

}  // namespace sverify
