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
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sverify/asnorm.hpp"
#include "sverify/embedding.hpp"
#include "sverify/error.hpp"
#include "sverify/qmf.hpp"
#include "sverify/scoring.hpp"
#include "sverify/synth.hpp"

namespace sverify {

// File formats. Binary files are little-endian with a 4-byte magic; text
// files are newline-terminated with space or tab separation as noted:
//   embedding store  EMB1 | u32 dim | u32 count | per record:
//                    u16 id_len, id bytes, dim * f32
//   frames file      FRM1 | u32 dim | u32 count | per record:
//                    u16 id_len, id, u16 spk_len, spk, u32 n_frames,
//                    n_frames * dim * f32
//   trial list       "label enroll test" (label 0/1) or "enroll test"
//   score file       "enroll test score", score with 6 fractional digits
//   corpus metadata  TSV utterance_id, speaker_id, duration_s
//   CMF map          TSV utterance_id, cmf
//   stats cache      TSV utterance_id, mean, std
//   QMF model        QMF1, feature count, per feature "name weight mean
//                    std", final "bias <value>"

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read '" + path + "'");
  return in;
}

inline void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff),
                         static_cast<char>((v >> 8) & 0xff)};
  out.write(bytes, 2);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline std::uint16_t get_u16(std::istream& in, const std::string& path) {
  unsigned char bytes[2];
  if (!in.read(reinterpret_cast<char*>(bytes), 2)) {
    throw Error(ErrorCode::kTruncatedFile, path);
  }
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

inline std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw Error(ErrorCode::kTruncatedFile, path);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

inline float get_f32(std::istream& in, const std::string& path) {
  const std::uint32_t bits = get_u32(in, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline std::string get_string(std::istream& in, std::size_t len,
                              const std::string& path) {
  std::string s(len, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(len))) {
    throw Error(ErrorCode::kTruncatedFile, path);
  }
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = line.find(sep, begin);
    if (end == std::string::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, end - begin));
    begin = end + 1;
  }
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream iss(line);
  std::string token;
  while (iss >> token) fields.push_back(token);
  return fields;
}

inline double parse_double(const std::string& token, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    throw Error(ErrorCode::kParseError, where + ": bad number '" + token + "'");
  }
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Embedding store
// ---------------------------------------------------------------------------

inline void write_embeddings_binary(const EmbeddingStore& store,
                                    const std::string& path) {
  auto out = detail::open_out(path, true);
  out.write("EMB1", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(store.dim()));
  detail::put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const Embedding& e : store.entries()) {
    detail::put_u16(out, static_cast<std::uint16_t>(e.utterance_id.size()));
    out.write(e.utterance_id.data(),
              static_cast<std::streamsize>(e.utterance_id.size()));
    for (double v : e.vector) detail::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline EmbeddingStore read_embeddings_binary(const std::string& path) {
  auto in = detail::open_in(path, true);
  char magic[4];
  if (!in.read(magic, 4)) throw Error(ErrorCode::kTruncatedFile, path);
  if (std::memcmp(magic, "EMB1", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "'" + path + "' is not an EMB1 file");
  }
  const std::uint32_t dim = detail::get_u32(in, path);
  const std::uint32_t count = detail::get_u32(in, path);
  if (dim == 0) throw Error(ErrorCode::kDimensionMismatch, "dim 0 in " + path);
  EmbeddingStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t id_len = detail::get_u16(in, path);
    Embedding e;
    e.utterance_id = detail::get_string(in, id_len, path);
    e.vector.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
      e.vector[d] = static_cast<double>(detail::get_f32(in, path));
    }
    store.add(std::move(e));
  }
  return store;
}

/// Tab-separated alternative for inspection and interchange. Values are
/// printed with nine significant digits, enough to round-trip f32 exactly.
inline void write_embeddings_tsv(const EmbeddingStore& store,
                                 const std::string& path) {
  auto out = detail::open_out(path, true);
  char buf[32];
  for (const Embedding& e : store.entries()) {
    out << e.utterance_id;
    for (double v : e.vector) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<float>(v));
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline EmbeddingStore read_embeddings_tsv(const std::string& path) {
  auto in = detail::open_in(path, false);
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() < 2) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": too few fields");
    }
    Embedding e;
    e.utterance_id = fields[0];
    for (std::size_t i = 1; i < fields.size(); ++i) {
      e.vector.push_back(static_cast<double>(static_cast<float>(
          detail::parse_double(fields[i], path + ":" + std::to_string(line_no)))));
    }
    store.add(std::move(e));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Frames file
// ---------------------------------------------------------------------------

inline void write_frames_record(std::ostream& out, const FrameMatrix& fm) {
  detail::put_u16(out, static_cast<std::uint16_t>(fm.utterance_id.size()));
  out.write(fm.utterance_id.data(),
            static_cast<std::streamsize>(fm.utterance_id.size()));
  detail::put_u16(out,
                  static_cast<std::uint16_t>(fm.speaker.speaker_id.size()));
  out.write(fm.speaker.speaker_id.data(),
            static_cast<std::streamsize>(fm.speaker.speaker_id.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(fm.n_frames));
  for (float v : fm.frames) detail::put_f32(out, v);
}

inline void write_frames(const std::vector<FrameMatrix>& corpus,
                         const std::string& path) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "no frames to write");
  auto out = detail::open_out(path, true);
  out.write("FRM1", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(corpus.front().dim));
  detail::put_u32(out, static_cast<std::uint32_t>(corpus.size()));
  for (const FrameMatrix& fm : corpus) write_frames_record(out, fm);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline std::vector<FrameMatrix> read_frames(const std::string& path) {
  auto in = detail::open_in(path, true);
  char magic[4];
  if (!in.read(magic, 4)) throw Error(ErrorCode::kTruncatedFile, path);
  if (std::memcmp(magic, "FRM1", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "'" + path + "' is not a FRM1 file");
  }
  const std::uint32_t dim = detail::get_u32(in, path);
  const std::uint32_t count = detail::get_u32(in, path);
  std::vector<FrameMatrix> corpus;
  corpus.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FrameMatrix fm;
    fm.dim = static_cast<int>(dim);
    fm.utterance_id = detail::get_string(in, detail::get_u16(in, path), path);
    fm.speaker.speaker_id =
        detail::get_string(in, detail::get_u16(in, path), path);
    fm.n_frames = detail::get_u32(in, path);
    fm.frames.resize(static_cast<std::size_t>(fm.n_frames) * dim);
    for (float& v : fm.frames) v = detail::get_f32(in, path);
    corpus.push_back(std::move(fm));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Trial lists and score files
// ---------------------------------------------------------------------------

inline void write_trials(const TrialList& trials, const std::string& path) {
  auto out = detail::open_out(path, true);
  for (const Trial& t : trials) {
    if (t.target.has_value()) out << (*t.target ? "1 " : "0 ");
    out << t.enroll_id << ' ' << t.test_id << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline TrialList read_trials(const std::string& path) {
  auto in = detail::open_in(path, false);
  TrialList trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_ws(line);
    Trial t;
    if (fields.size() == 3) {
      if (fields[0] == "1") {
        t.target = true;
      } else if (fields[0] == "0") {
        t.target = false;
      } else {
        throw Error(ErrorCode::kParseError,
                    path + ":" + std::to_string(line_no) + ": label '" +
                        fields[0] + "' is not 0 or 1");
      }
      t.enroll_id = fields[1];
      t.test_id = fields[2];
    } else if (fields.size() == 2) {
      t.enroll_id = fields[0];
      t.test_id = fields[1];
    } else {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 2 or 3 fields");
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

inline void write_scores(const TrialList& trials,
                         const std::vector<double>& scores,
                         const std::string& path) {
  if (trials.size() != scores.size()) {
    throw Error(ErrorCode::kTrialMismatch, "score/trial count mismatch");
  }
  auto out = detail::open_out(path, true);
  char buf[32];
  for (std::size_t i = 0; i < trials.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", scores[i]);
    out << trials[i].enroll_id << ' ' << trials[i].test_id << ' ' << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

struct ScoreFile {
  TrialList trials;  // unlabeled
  std::vector<double> scores;
};

inline ScoreFile read_scores(const std::string& path) {
  auto in = detail::open_in(path, false);
  ScoreFile sf;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_ws(line);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    Trial t;
    t.enroll_id = fields[0];
    t.test_id = fields[1];
    sf.trials.push_back(std::move(t));
    sf.scores.push_back(detail::parse_double(
        fields[2], path + ":" + std::to_string(line_no)));
  }
  return sf;
}

// ---------------------------------------------------------------------------
// Corpus metadata, CMF maps, cohort stats
// ---------------------------------------------------------------------------

inline void write_corpus_meta(const std::vector<CorpusUtterance>& corpus,
                              const std::string& path) {
  auto out = detail::open_out(path, true);
  char buf[32];
  for (const CorpusUtterance& u : corpus) {
    std::snprintf(buf, sizeof(buf), "%.2f", u.duration_s);
    out << u.utterance_id << '\t' << u.speaker.speaker_id << '\t' << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline std::vector<CorpusUtterance> read_corpus_meta(const std::string& path) {
  auto in = detail::open_in(path, false);
  std::vector<CorpusUtterance> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    CorpusUtterance u;
    u.utterance_id = fields[0];
    u.speaker.speaker_id = fields[1];
    u.duration_s = detail::parse_double(fields[2],
                                        path + ":" + std::to_string(line_no));
    corpus.push_back(std::move(u));
  }
  return corpus;
}

inline void write_cmf_map(const std::vector<std::pair<std::string, double>>& cmfs,
                          const std::string& path) {
  auto out = detail::open_out(path, true);
  for (const auto& [id, value] : cmfs) {
    out << id << '\t' << detail::format_double(value) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline CmfMap read_cmf_map(const std::string& path) {
  auto in = detail::open_in(path, false);
  CmfMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    if (!map.emplace(fields[0],
                     detail::parse_double(
                         fields[1], path + ":" + std::to_string(line_no)))
             .second) {
      throw Error(ErrorCode::kDuplicateId,
                  path + ": duplicate CMF for '" + fields[0] + "'");
    }
  }
  return map;
}

inline void write_stats_map(const StatsMap& stats, const std::string& path) {
  auto out = detail::open_out(path, true);
  for (const auto& [id, s] : stats) {
    out << id << '\t' << detail::format_double(s.mean) << '\t'
        << detail::format_double(s.std) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline StatsMap read_stats_map(const std::string& path) {
  auto in = detail::open_in(path, false);
  StatsMap stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    CohortStats s;
    s.mean = detail::parse_double(fields[1], where);
    s.std = detail::parse_double(fields[2], where);
    s.imposter_mean = s.mean;
    if (!stats.emplace(fields[0], s).second) {
      throw Error(ErrorCode::kDuplicateId,
                  path + ": duplicate stats for '" + fields[0] + "'");
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// QMF model file
// ---------------------------------------------------------------------------

inline void write_qmf_model(const QmfModel& model, const std::string& path) {
  auto out = detail::open_out(path, true);
  out << "QMF1\n" << model.feature_count() << '\n';
  for (std::size_t j = 0; j < model.feature_count(); ++j) {
    out << model.feature_names[j] << ' '
        << detail::format_double(model.weights[j]) << ' '
        << detail::format_double(model.feature_means[j]) << ' '
        << detail::format_double(model.feature_stds[j]) << '\n';
  }
  out << "bias " << detail::format_double(model.bias) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: '" + path + "'");
}

inline QmfModel read_qmf_model(const std::string& path) {
  auto in = detail::open_in(path, false);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kTruncatedFile, path);
  if (line != "QMF1") {
    throw Error(ErrorCode::kBadMagic, "'" + path + "' is not a QMF1 file");
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::kTruncatedFile, path);
  const long count = std::strtol(line.c_str(), nullptr, 10);
  if (count <= 0) {
    throw Error(ErrorCode::kParseError, path + ": bad feature count");
  }
  QmfModel model;
  for (long j = 0; j < count; ++j) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kTruncatedFile, path);
    const auto fields = detail::split_ws(line);
    if (fields.size() != 4) {
      throw Error(ErrorCode::kParseError, path + ": bad feature line '" + line + "'");
    }
    model.feature_names.push_back(fields[0]);
    model.weights.push_back(detail::parse_double(fields[1], path));
    model.feature_means.push_back(detail::parse_double(fields[2], path));
    model.feature_stds.push_back(detail::parse_double(fields[3], path));
    if (model.feature_stds.back() < kDegenerateStdEps) {
      throw Error(ErrorCode::kDegenerateStd, path + ": std below 1e-9");
    }
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::kTruncatedFile, path);
  const auto fields = detail::split_ws(line);
  if (fields.size() != 2 || fields[0] != "bias") {
    throw Error(ErrorCode::kParseError, path + ": bad bias line '" + line + "'");
  }
  model.bias = detail::parse_double(fields[1], path);
  return model;
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

inline std::string format_eval_report(double eer_value, double min_dcf_value,
                                      double p_target) {
  char buf[96];
  char p_buf[16];
  std::snprintf(p_buf, sizeof(p_buf), "%g", p_target);
  std::string report;
  std::snprintf(buf, sizeof(buf), "EER(%%) %.4f\n", 100.0 * eer_value);
  report += buf;
  std::snprintf(buf, sizeof(buf), "minDCF(p=%s) %.4f\n", p_buf, min_dcf_value);
  report += buf;
  return report;
}

}  // namespace sverify
