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
#include <random>

#include "sverify/rng.hpp"
#include "sverify/scoring.hpp"

using namespace sverify;

namespace {

EmbeddingStore tiny_store() {
  EmbeddingStore store;
  store.add({"a", {1.0, 0.0}, 3.0});
  store.add({"b", {1.0, 0.0}, 4.0});
  store.add({"c", {0.0, 1.0}, 5.0});
  store.add({"d", {1.0, 1.0}, 6.0});
  return store;
}

}  // namespace

TEST_CASE("raw_score worked examples") {
  Embedding a{"a", {0.3, 0.4}, 0.0};
  CHECK(raw_score(a, a) == 1.0);
  Embedding b{"b", {-0.4, 0.3}, 0.0};
  CHECK(raw_score(a, b) == Catch::Approx(0.0).margin(1e-15));
  Embedding c{"c", {1.0, 1.0}, 0.0};
  Embedding d{"d", {1.0, 0.0}, 0.0};
  CHECK(raw_score(c, d) == Catch::Approx(std::sqrt(2.0) / 2.0).margin(1e-12));
  CHECK(raw_score(c, d) == raw_score(d, c));
}

TEST_CASE("cmf_calibrated_score worked examples") {
  CHECK(cmf_calibrated_score(1.0, 1.0, 0.62) == 0.62);
  CHECK(cmf_calibrated_score(0.9, 0.8, 0.5) == Catch::Approx(0.36).margin(1e-15));
  CHECK(cmf_calibrated_score(0.0, 0.7, 0.9) == 0.0);

  CHECK_THROWS_MATCHES(cmf_calibrated_score(1.2, 0.5, 0.5), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kOutOfRange;
                       }));
  CHECK_THROWS_AS(cmf_calibrated_score(0.5, -0.1, 0.5), Error);
  CHECK_THROWS_AS(cmf_calibrated_score(0.5, 0.5, 1.5), Error);
}

TEST_CASE("cmf_calibrated_score shrinks and stays monotone") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const double ca = uniform01(rng);
    const double cb = uniform01(rng);
    const double r1 = 2.0 * uniform01(rng) - 1.0;
    const double r2 = 2.0 * uniform01(rng) - 1.0;
    const double lo = std::min(r1, r2);
    const double hi = std::max(r1, r2);
    CHECK(cmf_calibrated_score(ca, cb, lo) <= cmf_calibrated_score(ca, cb, hi));
    CHECK(std::abs(cmf_calibrated_score(ca, cb, r1)) <= std::abs(r1));
    CHECK(cmf_calibrated_score(ca, cb, r1) ==
          Catch::Approx(cmf_calibrated_score(cb, ca, r1)).margin(0.0));
  }
}

TEST_CASE("score_trials raw column") {
  const auto store = tiny_store();
  TrialList trials{{"a", "b", {}}, {"a", "c", {}}, {"d", "a", {}}};
  const auto table = score_trials(trials, store);
  REQUIRE(table.columns.count("raw") == 1);
  CHECK(table.columns.count("cmf") == 0);
  const auto& raw = table.column("raw");
  REQUIRE(raw.size() == 3);
  CHECK(raw[0] == 1.0);
  CHECK(raw[1] == 0.0);
  CHECK(raw[2] == Catch::Approx(std::sqrt(2.0) / 2.0).margin(1e-12));
}

TEST_CASE("score_trials cmf column reduces to raw at cmf 1") {
  const auto store = tiny_store();
  TrialList trials{{"a", "b", {}}};
  CmfMap cmfs{{"a", 1.0}, {"b", 1.0}};
  const auto table = score_trials(trials, store, &cmfs);
  CHECK(table.column("cmf") == table.column("raw"));
}

TEST_CASE("score_trials matches per-trial recomputation") {
  const auto store = tiny_store();
  TrialList trials{{"a", "d", {}}, {"c", "d", {}}, {"b", "c", {}}};
  CmfMap cmfs{{"a", 0.9}, {"b", 0.75}, {"c", 0.6}, {"d", 1.0}};
  const auto table = score_trials(trials, store, &cmfs);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const double raw =
        raw_score(store.get(trials[i].enroll_id), store.get(trials[i].test_id));
    CHECK(table.column("raw")[i] == Catch::Approx(raw).margin(0.0));
    const double calibrated = cmf_calibrated_score(
        cmfs.at(trials[i].enroll_id), cmfs.at(trials[i].test_id), raw);
    CHECK(table.column("cmf")[i] == Catch::Approx(calibrated).margin(0.0));
  }
}

TEST_CASE("score_trials permutes with its input") {
  const auto store = tiny_store();
  TrialList trials{{"a", "b", {}}, {"a", "c", {}}, {"d", "a", {}}, {"b", "d", {}}};
  const auto table = score_trials(trials, store);
  TrialList reversed(trials.rbegin(), trials.rend());
  const auto rtable = score_trials(reversed, store);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(table.column("raw")[i] ==
          rtable.column("raw")[trials.size() - 1 - i]);
  }
}

TEST_CASE("score_trials missing lookups") {
  const auto store = tiny_store();
  TrialList trials{{"a", "zz", {}}};
  CHECK_THROWS_MATCHES(score_trials(trials, store), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kMissingEmbedding;
                       }));
  TrialList ok{{"a", "b", {}}};
  CmfMap incomplete{{"a", 1.0}};
  CHECK_THROWS_MATCHES(score_trials(ok, store, &incomplete), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kMissingCmf;
                       }));
}
