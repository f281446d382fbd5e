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

#include "sverify/rng.hpp"
#include "sverify/segmentation.hpp"

using namespace sverify;

namespace {

Embedding emb(std::vector<double> v) {
  Embedding e;
  e.vector = std::move(v);
  return e;
}

std::vector<Embedding> random_segments(std::mt19937_64& rng, int n, int dim) {
  std::vector<Embedding> segments;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = normal01(rng);
    if (norm(v) < 1e-6) v[0] += 1.0;
    segments.push_back(emb(std::move(v)));
  }
  return segments;
}

}  // namespace

TEST_CASE("plan_segments worked examples") {
  const auto p1 = plan_segments(1000, 400, 2, 100);
  CHECK(p1.window == 400);
  CHECK(p1.hop == 200);
  CHECK(p1.ranges == std::vector<FrameRange>{
                         {0, 400}, {200, 600}, {400, 800}, {600, 1000}});

  const auto p2 = plan_segments(900, 400, 2, 100);
  CHECK(p2.ranges == std::vector<FrameRange>{
                         {0, 400}, {200, 600}, {400, 800}, {500, 900}});

  // Too short for a 400 window: halves down to 200.
  const auto p3 = plan_segments(300, 400, 2, 100);
  CHECK(p3.window == 200);
  CHECK(p3.hop == 100);
  CHECK(p3.ranges == std::vector<FrameRange>{{0, 200}, {100, 300}});

  CHECK_THROWS_MATCHES(plan_segments(99, 400, 2, 100), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::kTooShort;
                       }));
}

TEST_CASE("plan_segments covers the frame span without gaps") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::int64_t window = 2 * (1 + static_cast<std::int64_t>(bounded(rng, 300)));
    const std::int64_t total =
        window + static_cast<std::int64_t>(bounded(rng, 4000));
    const auto plan = plan_segments(total, window, 2, 2);
    REQUIRE_FALSE(plan.ranges.empty());
    CHECK(plan.hop == plan.window / 2);
    std::int64_t covered_to = 0;
    std::int64_t prev_start = -1;
    for (const auto& r : plan.ranges) {
      CHECK(r.length() == plan.window);
      CHECK(r.start > prev_start);
      CHECK(r.start >= 0);
      CHECK(r.end <= total);
      REQUIRE(r.start <= covered_to);  // no gap
      covered_to = std::max(covered_to, r.end);
      prev_start = r.start;
    }
    CHECK(covered_to == total);
  }
}

TEST_CASE("plan_segments adaptation reaches the requested count when possible") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const std::int64_t window_min = 2 * (1 + static_cast<std::int64_t>(bounded(rng, 50)));
    const std::int64_t window = window_min * (1 << bounded(rng, 4));
    const std::int64_t total =
        window_min + static_cast<std::int64_t>(bounded(rng, 3000));
    const std::int64_t min_segments = 1 + static_cast<std::int64_t>(bounded(rng, 6));
    const auto plan = plan_segments(total, window, min_segments, window_min);
    const auto floor_plan = plan_segments(total, window_min, 1, window_min);
    const auto max_achievable =
        static_cast<std::int64_t>(floor_plan.ranges.size());
    CHECK(static_cast<std::int64_t>(plan.ranges.size()) >=
          std::min(min_segments, max_achievable));
  }
}

TEST_CASE("consistency_vector worked examples") {
  CHECK(consistency_vector({emb({1, 0}), emb({1, 0})}) ==
        std::vector<double>{2.0, 0.0});
  CHECK(consistency_vector({emb({1, 0}), emb({0, 1})}) ==
        std::vector<double>{1.0, 1.0});
  CHECK(consistency_vector({emb({2, 0}), emb({0, 3})}) ==
        std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(consistency_vector({}), Error);
  CHECK_THROWS_AS(consistency_vector({emb({1, 0}), emb({0, 0})}), Error);
}

TEST_CASE("cmf worked examples") {
  CHECK(cmf({emb({1, 0}), emb({1, 0}), emb({1, 0})}) == 1.0);
  CHECK(cmf({emb({1, 0}), emb({0, 1})}) ==
        Catch::Approx(std::sqrt(2.0) / 2.0).margin(1e-12));
  CHECK(cmf({emb({1, 0}), emb({-1, 0})}) == 0.0);
}

TEST_CASE("cmf bounds, order and scale invariance") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const int dim = 2 + static_cast<int>(bounded(rng, 16));
    const int n = 1 + static_cast<int>(bounded(rng, 12));
    auto segments = random_segments(rng, n, dim);
    const double value = cmf(segments);
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);

    // Positive per-segment scaling must not change the CMF.
    auto scaled = segments;
    for (auto& s : scaled) {
      const double k = 0.1 + 5.0 * uniform01(rng);
      for (double& x : s.vector) x *= k;
    }
    CHECK(cmf(scaled) == Catch::Approx(value).margin(1e-9));

    shuffle(segments, rng);
    CHECK(cmf(segments) == Catch::Approx(value).margin(1e-9));
  }
}

TEST_CASE("cmf is 1 exactly when normalized segments coincide") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 + static_cast<int>(bounded(rng, 16));
    std::vector<double> base(dim);
    for (double& x : base) x = normal01(rng);
    if (norm(base) < 1e-6) base[0] += 1.0;
    const int n = 2 + static_cast<int>(bounded(rng, 10));
    std::vector<Embedding> segments;
    for (int i = 0; i < n; ++i) {
      auto v = base;
      const double k = 0.5 + 3.0 * uniform01(rng);
      for (double& x : v) x *= k;
      segments.push_back(emb(std::move(v)));
    }
    CHECK(cmf(segments) >= 1.0 - 1e-9);
  }
}

TEST_CASE("segment_score worked examples") {
  Embedding y = emb({1, 0});
  CHECK(segment_score({emb({1, 0}), emb({0, 1})}, y) == Catch::Approx(0.5));
  CHECK(segment_score({emb({2, 0}), emb({0.5, 0}), emb({7, 0})}, y) == 1.0);
  CHECK_THROWS_AS(segment_score({}, y), Error);
}

// The closed form: mean-of-cosines == (1/N)*||c||*cos(y, c).
TEST_CASE("segment_score matches the consistency-vector identity") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 2 + static_cast<int>(bounded(rng, 255));
    const int n = 1 + static_cast<int>(bounded(rng, 64));
    const auto segments = random_segments(rng, n, dim);
    std::vector<double> yv(dim);
    for (double& x : yv) x = normal01(rng);
    if (norm(yv) < 1e-6) yv[0] += 1.0;
    const Embedding y = emb(yv);

    const auto c = consistency_vector(segments);
    if (norm(c) < 1e-9) continue;  // cos(y, c) undefined
    const double direct = segment_score(segments, y);
    const double closed = cmf(segments) * cosine(y.vector, c);
    CHECK(direct == Catch::Approx(closed).margin(1e-9));
  }
}

TEST_CASE("SegmentSet keeps consistency vector and cmf in step") {
  std::mt19937_64 rng(26);
  const auto segments = random_segments(rng, 5, 8);
  const auto set = SegmentSet::build("utt", segments);
  const auto c = consistency_vector(segments);
  for (std::size_t d = 0; d < c.size(); ++d) {
    CHECK(set.consistency[d] == Catch::Approx(c[d]).margin(1e-9));
  }
  CHECK(set.cmf_value == Catch::Approx(norm(c) / 5.0).margin(1e-9));
  CHECK(set.segment_embeddings.size() == 5);
}
