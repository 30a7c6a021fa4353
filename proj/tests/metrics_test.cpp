#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "opinionforge/metrics.hpp"
#include "opinionforge/mock_backend.hpp"
#include "oracles.hpp"

using namespace opinionforge;
using Catch::Approx;

namespace {

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, int vocab) {
  std::vector<std::string> out(rng() % (max_len + 1));
  for (auto& t : out) t = "t" + std::to_string(rng() % static_cast<unsigned>(vocab));
  return out;
}

}  // namespace

TEST_CASE("rouge-1 worked example", "[metrics]") {
  auto s = rouge_n("the cat sat", "the cat slept on the mat", 1);
  CHECK(s.precision == Approx(2.0 / 3.0));
  CHECK(s.recall == Approx(2.0 / 6.0));
  CHECK(s.f1 == Approx(2 * (2.0 / 3) * (1.0 / 3) / (2.0 / 3 + 1.0 / 3)));
  auto b = rouge_n("the cat sat", "the cat slept on the mat", 2);
  CHECK(b.precision == Approx(1.0 / 2.0));
  CHECK(b.recall == Approx(1.0 / 5.0));
}

TEST_CASE("rouge clips repeated n-grams", "[metrics]") {
  auto s = rouge_n("the the the the", "the cat", 1);
  CHECK(s.precision == Approx(0.25));
  CHECK(s.recall == Approx(0.5));
}

TEST_CASE("rouge edge cases", "[metrics]") {
  auto same = rouge_n("Battery lasts long, screen bright!", "battery LASTS long screen bright", 2);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  auto none = rouge_n("alpha beta", "gamma delta", 1);
  CHECK(none.f1 == 0.0);
  auto empty = rouge_n("", "", 1);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
  auto short_bigram = rouge_n("one", "one", 2);
  CHECK(short_bigram.f1 == 0.0);
  CHECK_THROWS_AS(rouge_n("a", "a", 3), ValidationError);
  CHECK_THROWS_AS(rouge_n("a", "a", 0), ValidationError);
}

TEST_CASE("rouge matches the rescanning oracle", "[metrics]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    auto cand = random_tokens(rng, 20, 8);
    auto ref = random_tokens(rng, 20, 8);
    for (int n : {1, 2}) {
      auto got = rouge_n(cand, ref, n);
      auto want = oracle::rouge_n(cand, ref, static_cast<std::size_t>(n));
      CHECK(got.precision == Approx(want.precision).margin(1e-12));
      CHECK(got.recall == Approx(want.recall).margin(1e-12));
      CHECK(got.f1 == Approx(want.f1).margin(1e-12));
      // swapping candidate and reference swaps precision and recall
      auto swapped = rouge_n(ref, cand, n);
      CHECK(swapped.precision == Approx(got.recall).margin(1e-12));
      CHECK(swapped.recall == Approx(got.precision).margin(1e-12));
      CHECK(got.f1 >= 0.0);
      CHECK(got.f1 <= 1.0);
    }
  }
}

TEST_CASE("s_rouge averages per-summary means", "[metrics]") {
  // summary one against two reviews: recall 1/1 and 0/1 -> 0.5
  // summary two against one review: recall 2/4 -> 0.5
  std::vector<SummaryWithSources> input{{"alpha", {"alpha", "beta"}},
                                        {"gamma delta", {"gamma delta x y"}}};
  CHECK(s_rouge(input, 1, RougeComponent::Recall) == Approx(0.5));
  CHECK(s_rouge(input, 1, RougeComponent::Precision) == Approx((0.5 + 1.0) / 2));
  CHECK_THROWS_AS(s_rouge({}, 1, RougeComponent::F1), ValidationError);
  CHECK_THROWS_AS(mean_rouge("x", {}, 1), ValidationError);
}

TEST_CASE("sentiment agreement values", "[metrics]") {
  CHECK(sentiment_agreement(3.0, 3) == 1.0);
  CHECK(sentiment_agreement(2.0, 3) == Approx(0.613).margin(0.0005));
  CHECK(sentiment_agreement(3.0, 5) == Approx(0.387).margin(0.0005));
  CHECK(sentiment_agreement(4.0, 1) == Approx(0.226).margin(0.0005));
  CHECK(sentiment_agreement(0.0, 5) == Approx(0.0).margin(1e-12));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> rating(1.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    double r = rating(rng);
    int p = static_cast<int>(rng() % 6);
    double s = sentiment_agreement(r, p);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
  }
  double previous = 2.0;
  for (double d = 0.0; d <= 5.0; d += 0.25) {
    double s = sentiment_agreement(d, 0);
    CHECK(s < previous);
    previous = s;
  }
}

TEST_CASE("argmax ties go to the lower class", "[metrics]") {
  CHECK(argmax_class({0.1, 0.3, 0.3, 0.1, 0.1, 0.1}) == 1);
  CHECK(argmax_class({1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6}) == 0);
  CHECK(argmax_class({0, 0, 0, 0, 0, 1}) == 5);
}

TEST_CASE("s_sentiment reproduces the agreement table with the mock", "[metrics]") {
  MockBackend mock;
  std::vector<std::pair<std::string, int>> rows{{"Terrible and awful laptop.", 1},
                                                {"It arrived on Monday.", 2},
                                                {"Great and excellent keyboard.", 3},
                                                {"Terrible and awful screen.", 4},
                                                {"Great and excellent battery.", 5}};
  std::vector<double> expected{1.0, 0.613, 0.387, 0.226, 1.0};
  std::vector<SummaryGroup> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SummaryGroup g{GroupKey::for_rating(rows[i].second)};
    g.summary = rows[i].first;
    g.member_ratings = {rows[i].second};
    g.review_texts = {rows[i].first};
    CHECK(s_sentiment({g}, mock) == Approx(expected[i]).margin(0.0005));
    groups.push_back(g);
  }
  double mean = (1.0 + 0.613 + 0.387 + 0.226 + 1.0) / 5;
  CHECK(s_sentiment(groups, mock) == Approx(mean).margin(0.0005));

  auto report = evaluate(groups, mock);
  REQUIRE(report.per_group.size() == 5);
  CHECK(report.per_group[3].predicted_sentiment == 1);
  CHECK(report.per_group[3].s_sentiment == Approx(0.226).margin(0.0005));
  CHECK(report.aggregate.s_sentiment == Approx(s_sentiment(groups, mock)));
  CHECK(report.aggregate.rouge1.f1 == 1.0);
  CHECK(report.aggregate.predicted_sentiment == -1);
  CHECK(report.aggregate.mean_rating == Approx(3.0));
}

TEST_CASE("report writers", "[metrics]") {
  MockBackend mock;
  SummaryGroup g{GroupKey::for_rating(2)};
  g.summary = "It arrived on Monday.";
  g.member_ratings = {2};
  g.review_texts = {"It arrived on Monday in a box."};
  auto report = evaluate({g}, mock, {{"seed", 7}});

  std::ostringstream csv;
  write_report_csv(csv, report);
  std::string text = csv.str();
  CHECK(text.rfind("group_key,review_count,mean_rating,predicted_sentiment,s_sentiment,", 0) == 0);
  CHECK(text.find("\nrating2,1,2.000000,3,0.613147,") != std::string::npos);
  CHECK(text.find("\naggregate,1,2.000000,,0.613147,") != std::string::npos);

  std::ostringstream md;
  write_report_markdown(md, report, false, "mock");
  CHECK(md.str().find("| rating2 | no | mock | 0.613 | 0.727 | 1.000 | 0.571 |") != std::string::npos);

  auto j = to_json(report);
  CHECK(j["run_config"]["seed"] == 7);
  CHECK(j["per_group"][0]["group_key"] == "rating2");
}

TEST_CASE("evaluation rejects unscorable groups", "[metrics]") {
  MockBackend mock;
  SummaryGroup g{GroupKey::all()};
  g.member_ratings = {3};
  CHECK_THROWS_AS(evaluate({g}, mock), ValidationError);
  g.summary = "x";
  g.member_ratings.clear();
  CHECK_THROWS_AS(s_sentiment({g}, mock), ValidationError);
  CHECK_THROWS_AS(evaluate({}, mock), ValidationError);
}
