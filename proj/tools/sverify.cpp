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

// Command-line front end for the scoring backend. Every subcommand reads
// the previous stage's files, writes one primary output and prints a short
// summary; reruns with identical inputs, seeds and thread counts are
// byte-identical.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sverify/asnorm.hpp"
#include "sverify/embedding.hpp"
#include "sverify/error.hpp"
#include "sverify/io.hpp"
#include "sverify/metrics.hpp"
#include "sverify/parallel.hpp"
#include "sverify/pipeline.hpp"
#include "sverify/qmf.hpp"
#include "sverify/scoring.hpp"
#include "sverify/synth.hpp"

namespace {

using namespace sverify;

EmbeddingStore read_embeddings_any(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw Error(ErrorCode::kIoError, "cannot read '" + path + "'");
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::memcmp(magic, "EMB1", 4) == 0) return read_embeddings_binary(path);
  return read_embeddings_tsv(path);
}

DurationMap durations_from_meta(const std::vector<CorpusUtterance>& meta) {
  DurationMap durations;
  for (const CorpusUtterance& u : meta) {
    if (!durations.emplace(u.utterance_id, u.duration_s).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate metadata for '" + u.utterance_id + "'");
    }
  }
  return durations;
}

struct SynthArgs {
  int speakers = 20;
  int utts = 10;
  int feat_dim = 80;
  std::int64_t min_frames = 200;
  std::int64_t max_frames = 1500;
  double speaker_scale = 1.0;
  double noise_scale = 0.3;
  std::uint64_t seed = 0;
  std::string frames_out;
  std::string meta_out;
};

int run_synth(const SynthArgs& args) {
  SynthSpec spec;
  spec.n_speakers = args.speakers;
  spec.utts_per_speaker = args.utts;
  spec.dim = args.feat_dim;
  spec.min_frames = args.min_frames;
  spec.max_frames = args.max_frames;
  spec.speaker_scale = args.speaker_scale;
  spec.noise_scale = args.noise_scale;
  spec.seed = args.seed;

  const auto corpus = generate_corpus(spec);
  write_frames(corpus, args.frames_out);
  std::vector<CorpusUtterance> meta;
  meta.reserve(corpus.size());
  for (const FrameMatrix& fm : corpus) {
    meta.push_back({fm.utterance_id, fm.speaker, fm.duration_s()});
  }
  if (!args.meta_out.empty()) write_corpus_meta(meta, args.meta_out);
  std::cout << "synthesized " << corpus.size() << " utterances from "
            << args.speakers << " speakers (seed " << args.seed << ") -> "
            << args.frames_out << "\n";
  return 0;
}

struct EmbedArgs {
  std::string frames_in;
  std::string out;
  int embed_dim = 128;
  std::uint64_t projection_seed = 1000003;
  std::string format = "bin";
  int threads = 0;
};

int run_embed(const EmbedArgs& args) {
  const auto corpus = read_frames(args.frames_in);
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "empty frames file");
  const ToyEmbedder embedder(args.projection_seed, corpus.front().dim,
                             args.embed_dim);
  std::vector<Embedding> embedded(corpus.size());
  parallel_for(corpus.size(), args.threads, [&](std::size_t i) {
    embedded[i] = embedder.embed_all(corpus[i]);
  });
  EmbeddingStore store;
  for (auto& e : embedded) store.add(std::move(e));
  if (args.format == "tsv") {
    write_embeddings_tsv(store, args.out);
  } else {
    write_embeddings_binary(store, args.out);
  }
  std::cout << "embedded " << store.size() << " utterances (dim "
            << args.embed_dim << ") -> " << args.out << "\n";
  return 0;
}

struct CmfArgs {
  std::string frames_in;
  std::string out;
  SegmentationConfig segmentation;
  int embed_dim = 128;
  std::uint64_t projection_seed = 1000003;
  int threads = 0;
};

int run_cmf(const CmfArgs& args) {
  const auto corpus = read_frames(args.frames_in);
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "empty frames file");
  const ToyEmbedder embedder(args.projection_seed, corpus.front().dim,
                             args.embed_dim);
  std::vector<double> values(corpus.size());
  parallel_for(corpus.size(), args.threads, [&](std::size_t i) {
    values[i] = analyze_utterance(corpus[i], embedder, args.segmentation)
                    .cmf_value;
  });
  std::vector<std::pair<std::string, double>> cmfs;
  cmfs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    cmfs.emplace_back(corpus[i].utterance_id, values[i]);
  }
  write_cmf_map(cmfs, args.out);
  std::cout << "computed CMF for " << cmfs.size() << " utterances (window "
            << args.segmentation.window << ") -> " << args.out << "\n";
  return 0;
}

struct ScoreArgs {
  std::string trials_in;
  std::string embeddings_in;
  std::string cmf_map_in;
  std::string out;
};

int run_score(const ScoreArgs& args) {
  const TrialList trials = read_trials(args.trials_in);
  const EmbeddingStore store = read_embeddings_any(args.embeddings_in);
  ScoreTable table;
  std::string column = "raw";
  if (!args.cmf_map_in.empty()) {
    const CmfMap cmfs = read_cmf_map(args.cmf_map_in);
    table = score_trials(trials, store, &cmfs);
    column = "cmf";
  } else {
    table = score_trials(trials, store);
  }
  write_scores(trials, table.column(column), args.out);
  std::cout << "scored " << trials.size() << " trials (" << column << ") -> "
            << args.out << "\n";
  return 0;
}

struct AsnormArgs {
  std::string scores_in;
  std::string embeddings_in;
  std::string cohort_embeddings_in;
  std::string cohort_meta_in;
  std::string load_stats;
  std::string save_stats;
  int top_k = kDefaultTopK;
  std::string out;
  int threads = 0;
};

int run_asnorm(const AsnormArgs& args) {
  const ScoreFile scores = read_scores(args.scores_in);
  StatsMap stats;
  if (!args.load_stats.empty()) {
    stats = read_stats_map(args.load_stats);
  } else {
    if (args.cohort_embeddings_in.empty() || args.cohort_meta_in.empty()) {
      throw Error(ErrorCode::kInvalidSpec,
                  "need --cohort-embeddings and --cohort-meta, or --load-stats");
    }
    const EmbeddingStore store = read_embeddings_any(args.embeddings_in);
    const EmbeddingStore cohort_store =
        read_embeddings_any(args.cohort_embeddings_in);
    const auto cohort_meta = read_corpus_meta(args.cohort_meta_in);
    const Cohort cohort = build_cohort_from(cohort_store, cohort_meta, args.top_k);
    stats = compute_cohort_stats(store, cohort, args.threads);
  }
  if (!args.save_stats.empty()) write_stats_map(stats, args.save_stats);
  const std::vector<double> normed =
      asnorm_scores(scores.trials, scores.scores, stats);
  write_scores(scores.trials, normed, args.out);
  std::cout << "normalized " << normed.size() << " trial scores (top-"
            << args.top_k << " cohort) -> " << args.out << "\n";
  return 0;
}

struct QmfTrainArgs {
  std::string frames_in;
  std::string model_out;
  SegmentationConfig segmentation;
  int embed_dim = 128;
  std::uint64_t projection_seed = 1000003;
  int top_k = kDefaultTopK;
  SamplerSpec sampler;
  std::uint64_t seed = 0;
  LrConfig lr;
  bool no_cmf = false;
  bool no_log_transform = false;
  int threads = 0;
};

int run_qmf_train(const QmfTrainArgs& args) {
  const auto corpus = read_frames(args.frames_in);
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "empty frames file");
  const ToyEmbedder embedder(args.projection_seed, corpus.front().dim,
                             args.embed_dim);

  // Whole-utterance embeddings of the training corpus feed the cohort.
  std::vector<Embedding> embedded(corpus.size());
  parallel_for(corpus.size(), args.threads, [&](std::size_t i) {
    embedded[i] = embedder.embed_all(corpus[i]);
  });
  std::vector<std::pair<SpeakerLabel, Embedding>> labeled;
  std::vector<CorpusUtterance> meta;
  labeled.reserve(corpus.size());
  meta.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    labeled.emplace_back(corpus[i].speaker, std::move(embedded[i]));
    meta.push_back(
        {corpus[i].utterance_id, corpus[i].speaker, corpus[i].duration_s()});
  }
  const Cohort cohort = build_cohort(labeled, args.top_k);

  std::vector<std::string> warnings;
  const auto trials = sample_trials(meta, args.sampler, args.seed, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  QmfPipelineConfig pipeline;
  pipeline.segmentation = args.segmentation;
  pipeline.use_cmf = !args.no_cmf;
  pipeline.log_transform = !args.no_log_transform;
  pipeline.threads = args.threads;
  const QmfTrainingData data = build_qmf_training_data(
      trials, frame_source_from(corpus), embedder, cohort, pipeline);

  const QmfModel model =
      train_lr(data.features, data.labels, args.lr, data.feature_names);
  write_qmf_model(model, args.model_out);
  std::cout << "trained QMF on " << data.features.size() << " trials -> "
            << args.model_out << "\n";
  return 0;
}

struct QmfApplyArgs {
  std::string model_in;
  std::string scores_in;
  std::string embeddings_in;
  std::string stats_in;
  std::string meta_in;
  std::string out;
};

int run_qmf_apply(const QmfApplyArgs& args) {
  const QmfModel model = read_qmf_model(args.model_in);
  const ScoreFile scores = read_scores(args.scores_in);
  const EmbeddingStore store = read_embeddings_any(args.embeddings_in);
  const StatsMap stats = read_stats_map(args.stats_in);
  const DurationMap durations =
      durations_from_meta(read_corpus_meta(args.meta_in));
  const std::vector<double> calibrated = apply_qmf_to_trials(
      model, scores.trials, scores.scores, store, stats, durations);
  write_scores(scores.trials, calibrated, args.out);
  std::cout << "calibrated " << calibrated.size() << " trial scores -> "
            << args.out << "\n";
  return 0;
}

struct FuseArgs {
  std::vector<std::string> scores_in;
  std::vector<double> weights;
  std::string out;
};

int run_fuse(const FuseArgs& args) {
  std::vector<ScoreTable> tables;
  std::vector<const ScoreTable*> pointers;
  FusionSpec spec;
  for (const std::string& path : args.scores_in) {
    const ScoreFile sf = read_scores(path);
    ScoreTable t;
    t.trials = sf.trials;
    t.columns["score"] = sf.scores;
    tables.push_back(std::move(t));
    spec.system_names.push_back(path);
  }
  for (const auto& t : tables) pointers.push_back(&t);
  spec.weights = args.weights.empty()
                     ? std::vector<double>(tables.size(), 1.0)
                     : args.weights;
  const ScoreTable fused = fuse(pointers, spec, "score");
  write_scores(fused.trials, fused.column("fused"), args.out);
  std::cout << "fused " << tables.size() << " systems over "
            << fused.trials.size() << " trials -> " << args.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string scores_in;
  std::string trials_in;
  double p_target = 0.05;
  double c_miss = 1.0;
  double c_fa = 1.0;
  std::string out;
};

int run_eval(const EvalArgs& args) {
  const ScoreFile scores = read_scores(args.scores_in);
  const TrialList trials = read_trials(args.trials_in);
  if (trials.size() != scores.trials.size()) {
    throw Error(ErrorCode::kTrialMismatch,
                "trial list and score file have different lengths");
  }
  std::vector<bool> targets;
  targets.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].enroll_id != scores.trials[i].enroll_id ||
        trials[i].test_id != scores.trials[i].test_id) {
      throw Error(ErrorCode::kTrialMismatch,
                  "trial " + std::to_string(i) + " differs between files");
    }
    if (!trials[i].target.has_value()) {
      throw Error(ErrorCode::kParseError,
                  "eval needs labeled trials (line " + std::to_string(i + 1) + ")");
    }
    targets.push_back(*trials[i].target);
  }
  const double eer_value = eer(scores.scores, targets);
  const double dcf_value =
      min_dcf(scores.scores, targets, {args.c_miss, args.c_fa, args.p_target});
  const std::string report =
      format_eval_report(eer_value, dcf_value, args.p_target);
  std::cout << report;
  if (!args.out.empty()) {
    auto out = detail::open_out(args.out, true);
    out << report;
  }
  return 0;
}

void add_threads_flag(CLI::App* cmd, int* threads) {
  *threads = default_thread_count();
  cmd->add_option("--threads", *threads,
                  "worker threads (default: SVERIFY_THREADS or machine)")
      ->check(CLI::PositiveNumber);
}

void add_segmentation_flags(CLI::App* cmd, SegmentationConfig* seg) {
  cmd->add_option("--window", seg->window, "segment window in frames")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-window", seg->window_min,
                  "smallest window the adaptation may reach")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-segments", seg->min_segments,
                  "segment count the adaptation aims for")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speaker-verification backend: synthetic corpora, CMF scoring, "
               "AS-Norm, QMF calibration, fusion and evaluation"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--speakers", synth_args.speakers)->check(CLI::Range(2, 100000))->capture_default_str();
  synth->add_option("--utts", synth_args.utts, "utterances per speaker")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--feat-dim", synth_args.feat_dim)->check(CLI::Range(2, 4096))->capture_default_str();
  synth->add_option("--min-frames", synth_args.min_frames)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--max-frames", synth_args.max_frames)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--speaker-scale", synth_args.speaker_scale)->capture_default_str();
  synth->add_option("--noise-scale", synth_args.noise_scale)->capture_default_str();
  synth->add_option("--seed", synth_args.seed)->capture_default_str();
  synth->add_option("--frames-out", synth_args.frames_out)->required();
  synth->add_option("--meta-out", synth_args.meta_out, "corpus metadata TSV");

  EmbedArgs embed_args;
  auto* embed = app.add_subcommand("embed", "embed whole utterances");
  embed->add_option("--frames", embed_args.frames_in)->required()->check(CLI::ExistingFile);
  embed->add_option("--out", embed_args.out)->required();
  embed->add_option("--embed-dim", embed_args.embed_dim)->check(CLI::PositiveNumber)->capture_default_str();
  embed->add_option("--projection-seed", embed_args.projection_seed)->capture_default_str();
  embed->add_option("--format", embed_args.format)->check(CLI::IsMember({"bin", "tsv"}))->capture_default_str();
  add_threads_flag(embed, &embed_args.threads);

  CmfArgs cmf_args;
  auto* cmf_cmd = app.add_subcommand("cmf", "per-utterance consistency factors");
  cmf_cmd->add_option("--frames", cmf_args.frames_in)->required()->check(CLI::ExistingFile);
  cmf_cmd->add_option("--out", cmf_args.out)->required();
  add_segmentation_flags(cmf_cmd, &cmf_args.segmentation);
  cmf_cmd->add_option("--embed-dim", cmf_args.embed_dim)->check(CLI::PositiveNumber)->capture_default_str();
  cmf_cmd->add_option("--projection-seed", cmf_args.projection_seed)->capture_default_str();
  add_threads_flag(cmf_cmd, &cmf_args.threads);

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "cosine-score a trial list");
  score->add_option("--trials", score_args.trials_in)->required()->check(CLI::ExistingFile);
  score->add_option("--embeddings", score_args.embeddings_in)->required()->check(CLI::ExistingFile);
  score->add_option("--cmf-map", score_args.cmf_map_in, "scale scores by CMF")->check(CLI::ExistingFile);
  score->add_option("--out", score_args.out)->required();

  AsnormArgs asnorm_args;
  auto* asnorm = app.add_subcommand("asnorm", "adaptive score normalization");
  asnorm->add_option("--scores", asnorm_args.scores_in)->required()->check(CLI::ExistingFile);
  asnorm->add_option("--embeddings", asnorm_args.embeddings_in, "trial-side embeddings")->check(CLI::ExistingFile);
  asnorm->add_option("--cohort-embeddings", asnorm_args.cohort_embeddings_in)->check(CLI::ExistingFile);
  asnorm->add_option("--cohort-meta", asnorm_args.cohort_meta_in)->check(CLI::ExistingFile);
  asnorm->add_option("--load-stats", asnorm_args.load_stats, "reuse a stats cache")->check(CLI::ExistingFile);
  asnorm->add_option("--save-stats", asnorm_args.save_stats, "write the stats cache");
  asnorm->add_option("--top-k", asnorm_args.top_k)->check(CLI::PositiveNumber)->capture_default_str();
  asnorm->add_option("--out", asnorm_args.out)->required();
  add_threads_flag(asnorm, &asnorm_args.threads);

  QmfTrainArgs qmf_train_args;
  auto* qmf_train = app.add_subcommand("qmf-train", "train the QMF calibrator");
  qmf_train->add_option("--frames", qmf_train_args.frames_in)->required()->check(CLI::ExistingFile);
  qmf_train->add_option("--model-out", qmf_train_args.model_out)->required();
  add_segmentation_flags(qmf_train, &qmf_train_args.segmentation);
  qmf_train->add_option("--embed-dim", qmf_train_args.embed_dim)->check(CLI::PositiveNumber)->capture_default_str();
  qmf_train->add_option("--projection-seed", qmf_train_args.projection_seed)->capture_default_str();
  qmf_train->add_option("--top-k", qmf_train_args.top_k)->check(CLI::PositiveNumber)->capture_default_str();
  qmf_train->add_option("--pairs-per-condition", qmf_train_args.sampler.pairs_per_condition)->check(CLI::PositiveNumber)->capture_default_str();
  qmf_train->add_option("--long-threshold", qmf_train_args.sampler.long_threshold_s)->capture_default_str();
  qmf_train->add_option("--clip-lo", qmf_train_args.sampler.short_clip_lo_s)->capture_default_str();
  qmf_train->add_option("--clip-hi", qmf_train_args.sampler.short_clip_hi_s)->capture_default_str();
  qmf_train->add_option("--target-ratio", qmf_train_args.sampler.target_ratio)->capture_default_str();
  qmf_train->add_option("--seed", qmf_train_args.seed)->capture_default_str();
  qmf_train->add_option("--lr", qmf_train_args.lr.learning_rate)->capture_default_str();
  qmf_train->add_option("--epochs", qmf_train_args.lr.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  qmf_train->add_option("--l2", qmf_train_args.lr.l2_lambda)->capture_default_str();
  qmf_train->add_flag("--no-cmf", qmf_train_args.no_cmf, "score feature without CMF scaling");
  qmf_train->add_flag("--no-log-transform", qmf_train_args.no_log_transform, "raw durations and magnitudes");
  add_threads_flag(qmf_train, &qmf_train_args.threads);

  QmfApplyArgs qmf_apply_args;
  auto* qmf_apply = app.add_subcommand("qmf-apply", "apply a trained QMF");
  qmf_apply->add_option("--model", qmf_apply_args.model_in)->required()->check(CLI::ExistingFile);
  qmf_apply->add_option("--scores", qmf_apply_args.scores_in)->required()->check(CLI::ExistingFile);
  qmf_apply->add_option("--embeddings", qmf_apply_args.embeddings_in)->required()->check(CLI::ExistingFile);
  qmf_apply->add_option("--stats", qmf_apply_args.stats_in, "AS-Norm stats cache")->required()->check(CLI::ExistingFile);
  qmf_apply->add_option("--meta", qmf_apply_args.meta_in, "corpus metadata TSV")->required()->check(CLI::ExistingFile);
  qmf_apply->add_option("--out", qmf_apply_args.out)->required();

  FuseArgs fuse_args;
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse score files");
  fuse_cmd->add_option("--scores", fuse_args.scores_in)->required()->expected(1, 64)->check(CLI::ExistingFile);
  fuse_cmd->add_option("--weights", fuse_args.weights, "one per system (default equal)");
  fuse_cmd->add_option("--out", fuse_args.out)->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "EER and minDCF of a score file");
  eval->add_option("--scores", eval_args.scores_in)->required()->check(CLI::ExistingFile);
  eval->add_option("--trials", eval_args.trials_in, "labeled trial list")->required()->check(CLI::ExistingFile);
  eval->add_option("--p-target", eval_args.p_target)->capture_default_str();
  eval->add_option("--c-miss", eval_args.c_miss)->capture_default_str();
  eval->add_option("--c-fa", eval_args.c_fa)->capture_default_str();
  eval->add_option("--out", eval_args.out, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (embed->parsed()) return run_embed(embed_args);
    if (cmf_cmd->parsed()) return run_cmf(cmf_args);
    if (score->parsed()) return run_score(score_args);
    if (asnorm->parsed()) return run_asnorm(asnorm_args);
    if (qmf_train->parsed()) return run_qmf_train(qmf_train_args);
    if (qmf_apply->parsed()) return run_qmf_apply(qmf_apply_args);
    if (fuse_cmd->parsed()) return run_fuse(fuse_args);
    if (eval->parsed()) return run_eval(eval_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
