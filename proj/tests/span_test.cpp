#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "opinionforge/mock_backend.hpp"
#include "opinionforge/mrc.hpp"
#include "opinionforge/span.hpp"
#include "oracles.hpp"

using namespace opinionforge;

namespace {

std::vector<double> random_simplex(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  double sum = 0;
  for (double& x : v) {
    x = u(rng);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

SpanDistribution dist(std::vector<double> l1, std::vector<double> l2) {
  return {std::move(l1), std::move(l2)};
}

}  // namespace

TEST_CASE("sequential decode examples", "[mrc]") {
  CHECK(decode_span_sequential(dist({0.05, 0.90, 0.05}, {0.05, 0.15, 0.80}), 0) ==
        SpanIndices{1, 2});
  CHECK(decode_span_sequential(dist({0.1, 0.2, 0.7}, {0.1, 0.8, 0.1}), 0) == SpanIndices{1, 1});
  // Ties resolve to the lowest index.
  CHECK(decode_span_sequential(dist({0.0, 0.5, 0.5}, {0.0, 0.5, 0.5}), 0) == SpanIndices{1, 1});
}

TEST_CASE("sequential decode strict mode", "[mrc]") {
  // End peak at 1 is inadmissible under s < e with sep 0.
  auto d = dist({0.1, 0.2, 0.7}, {0.1, 0.8, 0.1});
  CHECK(decode_span_sequential(d, 0, SpanRule::StrictlyIncreasing) == SpanIndices{1, 2});
  CHECK_THROWS_AS(decode_span_sequential(dist({0.5, 0.5}, {0.5, 0.5}), 0,
                                         SpanRule::StrictlyIncreasing),
                  DecodeError);
}

TEST_CASE("decoders reject bad input", "[mrc]") {
  CHECK_THROWS_AS(decode_span_sequential(dist({0.5, 0.5}, {0.5, 0.5}), 1), DecodeError);
  CHECK_THROWS_AS(decode_span_joint(dist({0.5, 0.5}, {0.5, 0.5}), 1), DecodeError);
  CHECK_THROWS_AS(decode_span_sequential(dist({0.5, 0.6}, {0.5, 0.5}), 0), ValidationError);
  CHECK_THROWS_AS(decode_span_sequential(dist({1.0}, {0.5, 0.5}), 0), ValidationError);
  CHECK_THROWS_AS(decode_span_joint(dist({-0.5, 1.5}, {0.5, 0.5}), 0), ValidationError);
}

TEST_CASE("joint decode examples", "[mrc]") {
  std::vector<double> l1(8, 0.0), l2(8, 0.0);
  l1[3] = 1.0;
  l2[5] = 1.0;
  CHECK(decode_span_joint(dist(l1, l2), 1) == SpanIndices{3, 5});

  // Start peak after end peak: 6-token case checked against brute force.
  auto l1b = std::vector<double>{0.0, 0.05, 0.1, 0.05, 0.6, 0.2};
  auto l2b = std::vector<double>{0.0, 0.1, 0.5, 0.1, 0.1, 0.2};
  auto got = decode_span_joint(dist(l1b, l2b), 0);
  auto want = oracle::joint_decode(l1b, l2b, 0);
  CHECK(got.start == want.start);
  CHECK(got.end == want.end);
  CHECK(got == SpanIndices{4, 5});
}

TEST_CASE("decoders match brute force on random distributions", "[mrc][property]") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> len(2, 12);
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t n = len(rng);
    std::uniform_int_distribution<std::size_t> sep_pick(0, n - 2);
    std::size_t sep = sep_pick(rng);
    auto d = dist(random_simplex(rng, n), random_simplex(rng, n));
    for (bool strict : {false, true}) {
      if (strict && sep + 2 >= n) continue;
      auto rule = strict ? SpanRule::StrictlyIncreasing : SpanRule::AllowSingleToken;
      auto seq = decode_span_sequential(d, sep, rule);
      auto seq_oracle = oracle::sequential_decode(d.start_probs, d.end_probs, sep, strict);
      CHECK(seq.start == seq_oracle.start);
      CHECK(seq.end == seq_oracle.end);
      auto joint = decode_span_joint(d, sep, rule);
      auto joint_oracle = oracle::joint_decode(d.start_probs, d.end_probs, sep, strict);
      CHECK(joint.start == joint_oracle.start);
      CHECK(joint.end == joint_oracle.end);
      for (auto s : {seq, joint}) {
        CHECK(sep < s.start);
        CHECK((strict ? s.start < s.end : s.start <= s.end));
        CHECK(s.end < n);
      }
      // Agreement when the unconstrained argmaxes are already admissible.
      auto a1 = std::max_element(d.start_probs.begin(), d.start_probs.end()) - d.start_probs.begin();
      auto a2 = std::max_element(d.end_probs.begin(), d.end_probs.end()) - d.end_probs.begin();
      if (!strict && static_cast<std::size_t>(a1) > sep && a1 <= a2) {
        CHECK(seq == joint);
      }
    }
  }
}

TEST_CASE("joint decode with zero end mass prefers the smallest start", "[mrc]") {
  // Only the first pair has a positive product after sep; all others are zero.
  auto d = dist({0.0, 0.0, 0.5, 0.5}, {0.5, 0.5, 0.0, 0.0});
  auto got = decode_span_joint(d, 0);
  auto want = oracle::joint_decode(d.start_probs, d.end_probs, 0);
  CHECK(got.start == want.start);
  CHECK(got.end == want.end);
}

TEST_CASE("span_loss", "[mrc]") {
  std::vector<double> one_hot(8, 0.0);
  one_hot[3] = 1.0;
  CHECK(span_loss(dist(one_hot, one_hot), 3, 3) == 0.0);
  std::vector<double> uniform(8, 1.0 / 8);
  CHECK(span_loss(dist(uniform, uniform), 0, 7) == Catch::Approx(std::log(8.0)).margin(1e-12));
  // Fixture: -(ln 0.6 + ln 0.25) / 2, computed by hand = 0.948560...
  auto d = dist({0.1, 0.6, 0.3}, {0.5, 0.25, 0.25});
  CHECK(span_loss(d, 1, 2) == Catch::Approx(0.9485599924429406).epsilon(1e-12));
  // Zero gold probability is floored, not infinite.
  CHECK(span_loss(dist({1.0, 0.0}, {1.0, 0.0}), 1, 0) ==
        Catch::Approx(-std::log(1e-12) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(span_loss(d, 3, 0), ValidationError);
  CHECK_THROWS_AS(span_loss(d, 0, 3), ValidationError);
}

TEST_CASE("span_loss is non-negative, zero only for perfect predictions", "[mrc][property]") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 2 + static_cast<std::size_t>(trial % 10);
    auto d = dist(random_simplex(rng, n), random_simplex(rng, n));
    double loss = span_loss(d, trial % n, (trial * 7) % n);
    CHECK(loss > 0.0);
  }
}

TEST_CASE("span_text maps tokens to a contiguous substring", "[mrc]") {
  MockBackend backend(3);
  const std::string context = "The screen is really bright and sharp";
  QaResult qa = backend.qa("How is display?", context);
  const auto& tok = qa.tokenization;
  for (std::size_t s = tok.sep_index + 1; s < tok.tokens.size(); ++s) {
    for (std::size_t e = s; e < tok.tokens.size(); ++e) {
      std::string text = span_text(tok, {s, e}, context);
      if (e == tok.tokens.size() - 1 && s == e) {
        CHECK(text.empty());
        continue;
      }
      CHECK_FALSE(text.empty());
      CHECK(context.find(text) != std::string::npos);
    }
  }
}
