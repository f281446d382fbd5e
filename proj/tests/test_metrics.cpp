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
#include <vector>

#include "metric_oracle.hpp"
#include "sverify/metrics.hpp"
#include "sverify/rng.hpp"

using namespace sverify;

namespace {

ScoreTable table_of(std::vector<double> scores, const std::string& column) {
  ScoreTable t;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    t.trials.push_back({"e" + std::to_string(i), "t" + std::to_string(i), {}});
  }
  t.columns[column] = std::move(scores);
  return t;
}

struct Instance {
  std::vector<double> scores;
  std::vector<bool> targets;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_trials) {
  Instance inst;
  const std::size_t n = 2 + bounded(rng, max_trials - 1);
  bool has_target = false;
  bool has_nontarget = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool target = bounded(rng, 2) == 1;
    double score = 2.0 * uniform01(rng) - 1.0 + (target ? 0.3 : 0.0);
    if (bounded(rng, 4) == 0) score = std::round(score * 8.0) / 8.0;  // ties
    inst.scores.push_back(score);
    inst.targets.push_back(target);
    (target ? has_target : has_nontarget) = true;
  }
  if (!has_target) inst.targets[0] = true;
  if (!has_nontarget) inst.targets[inst.targets.size() - 1] = false;
  return inst;
}

}  // namespace

TEST_CASE("fuse worked examples") {
  const auto a = table_of({0.2, 0.6}, "asnorm");
  const auto b = table_of({0.4, 0.2}, "asnorm");

  const auto mean = fuse({&a, &b}, {{"a", "b"}, {1.0, 1.0}}, "asnorm");
  CHECK(mean.column("fused")[0] == Catch::Approx(0.3).margin(1e-15));
  CHECK(mean.column("fused")[1] == Catch::Approx(0.4).margin(1e-15));

  const auto identity = fuse({&a}, {{"a"}, {1.0}}, "asnorm");
  CHECK(identity.column("fused") == a.column("asnorm"));

  const auto degenerate = fuse({&a, &b}, {{"a", "b"}, {2.0, 0.0}}, "asnorm");
  CHECK(degenerate.column("fused") == a.column("asnorm"));

  CHECK_THROWS_MATCHES(fuse({&a, &b}, {{"a", "b"}, {0.0, 0.0}}, "asnorm"),
                       Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kAllZeroWeights;
                       }));

  auto c = table_of({0.4, 0.2}, "asnorm");
  c.trials[1].test_id = "other";
  CHECK_THROWS_MATCHES(fuse({&a, &c}, {{"a", "c"}, {1.0, 1.0}}, "asnorm"),
                       Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kTrialMismatch;
                       }));
}

TEST_CASE("fuse of identical tables with equal weights is the identity") {
  std::mt19937_64 rng(51);
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) scores.push_back(2.0 * uniform01(rng) - 1.0);
  const auto t = table_of(scores, "asnorm");
  const auto fused = fuse({&t, &t, &t}, {{"a", "b", "c"}, {1, 1, 1}}, "asnorm");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(fused.column("fused")[i] == Catch::Approx(scores[i]).margin(1e-15));
  }
}

TEST_CASE("eer worked examples") {
  CHECK(eer({0.9, 0.8, 0.1, 0.2}, {true, true, false, false}) == 0.0);
  CHECK(eer({0.9, 0.8, 0.3, 0.7, 0.2, 0.1},
            {true, true, true, false, false, false}) ==
        Catch::Approx(1.0 / 3.0).margin(1e-9));
  // Swapped labels on perfectly separated scores: total inversion.
  CHECK(eer({0.9, 0.8, 0.1, 0.2}, {false, false, true, true}) == 1.0);

  CHECK_THROWS_MATCHES(eer({0.5, 0.4}, {true, true}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kSingleClass;
                       }));
}

TEST_CASE("min_dcf worked examples") {
  const DcfParams p05{1.0, 1.0, 0.05};
  CHECK(min_dcf({0.9, 0.8, 0.1, 0.2}, {true, true, false, false}, p05) == 0.0);
  CHECK(min_dcf({0.9, 0.8, 0.3, 0.7, 0.2, 0.1},
                {true, true, true, false, false, false}, p05) ==
        Catch::Approx(1.0 / 3.0).margin(1e-12));
  // Uninformative scores: the best decision is one of the trivial ones.
  CHECK(min_dcf({0.4, 0.4, 0.4, 0.4}, {true, false, true, false}, p05) == 1.0);

  CHECK_THROWS_AS(min_dcf({0.5, 0.4}, {false, false}, p05), Error);
  CHECK_THROWS_AS(min_dcf({0.5, 0.4}, {true, false}, {0.0, 1.0, 0.05}), Error);
  CHECK_THROWS_AS(min_dcf({0.5, 0.4}, {true, false}, {1.0, 1.0, 1.5}), Error);
}

TEST_CASE("metrics match the exhaustive-threshold oracle") {
  std::mt19937_64 rng(52);
  const DcfParams params[] = {{1.0, 1.0, 0.05}, {1.0, 1.0, 0.01}, {10.0, 1.0, 0.3}};
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = random_instance(rng, 400);
    CHECK(eer(inst.scores, inst.targets) ==
          Catch::Approx(sverify_oracle::eer(inst.scores, inst.targets))
              .margin(1e-9));
    for (const auto& p : params) {
      CHECK(min_dcf(inst.scores, inst.targets, p) ==
            Catch::Approx(sverify_oracle::min_dcf(inst.scores, inst.targets, p))
                .margin(1e-12));
    }
  }
}

TEST_CASE("metrics are invariant under strictly increasing transforms") {
  std::mt19937_64 rng(53);
  const DcfParams p05{1.0, 1.0, 0.05};
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = random_instance(rng, 300);
    const double base_eer = eer(inst.scores, inst.targets);
    const double base_dcf = min_dcf(inst.scores, inst.targets, p05);
    CHECK(base_eer >= 0.0);
    CHECK(base_eer <= 1.0);
    CHECK(base_dcf >= 0.0);
    CHECK(base_dcf <= 1.0);

    auto affine = inst.scores;
    for (double& s : affine) s = 3.25 * s + 0.75;
    CHECK(eer(affine, inst.targets) == Catch::Approx(base_eer).margin(1e-12));
    CHECK(min_dcf(affine, inst.targets, p05) ==
          Catch::Approx(base_dcf).margin(1e-12));

    auto cubic = inst.scores;
    for (double& s : cubic) s = s * s * s + s;
    CHECK(eer(cubic, inst.targets) == Catch::Approx(base_eer).margin(1e-12));
    CHECK(min_dcf(cubic, inst.targets, p05) ==
          Catch::Approx(base_dcf).margin(1e-12));
  }
}
