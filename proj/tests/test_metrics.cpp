#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "memsteer/errors.hpp"
#include "memsteer/metrics.hpp"
#include "memsteer/util.hpp"

using namespace memsteer;
using metrics::Preference;

namespace {

/// Straight-line reference for the clipped objective, written independently
/// of the library implementation.
double oracle_clipped_objective(const std::vector<double>& rewards,
                                const std::vector<double>& ratios, double eps) {
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    double adv = rewards[i] - mean;
    double lo = 1.0 - eps, hi = 1.0 + eps;
    double clipped = ratios[i] < lo ? lo : (ratios[i] > hi ? hi : ratios[i]);
    acc += std::min(ratios[i] * adv, clipped * adv);
  }
  return acc / static_cast<double>(rewards.size());
}

}  // namespace

TEST_CASE("alignment error is the absolute scale distance") {
  for (int md = 1; md <= 5; ++md) {
    for (int p = 1; p <= 5; ++p) {
      CHECK(metrics::alignment_error(md, Preference{p}) == std::abs(md - p));
    }
  }
  CHECK_THROWS_AS(metrics::alignment_error(0, Preference{3}), ContractError);
  CHECK_THROWS_AS(metrics::alignment_error(3, Preference{6}), ContractError);
}

TEST_CASE("total reward combines alignment, task, and general terms") {
  metrics::VerdictScores scores{3, 4, 2.5};
  auto reward = metrics::total_reward(scores, Preference{2});
  CHECK(reward.r_align == doctest::Approx(-1.0));
  CHECK(reward.r_task == 4);
  CHECK(reward.r_general == doctest::Approx(2.5));
  CHECK(reward.total == doctest::Approx(5.5));

  auto aligned = metrics::total_reward({5, 5, 5.0}, Preference{5});
  CHECK(aligned.total == doctest::Approx(10.0));

  CHECK_THROWS_AS(metrics::total_reward({3, 0, 2.0}, Preference{3}), ContractError);
  CHECK_THROWS_AS(metrics::total_reward({3, 3, 5.5}, Preference{3}), ContractError);
  CHECK_THROWS_AS(metrics::total_reward({3, 3, -0.1}, Preference{3}), ContractError);
}

TEST_CASE("group advantages subtract the group mean") {
  auto adv = metrics::grpo_advantages({-1.0, -3.0, 0.0, -2.0});
  REQUIRE(adv.size() == 4);
  CHECK(adv[0] == doctest::Approx(0.5));
  CHECK(adv[1] == doctest::Approx(-1.5));
  CHECK(adv[2] == doctest::Approx(1.5));
  CHECK(adv[3] == doctest::Approx(-0.5));

  CHECK_THROWS_AS(metrics::grpo_advantages({1.0}), ContractError);
  CHECK_THROWS_AS(metrics::grpo_advantages({}), ContractError);
}

TEST_CASE("group advantages center to zero across random groups") {
  util::Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t k = 2 + rng.below(8);
    std::vector<double> rewards;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double r = (rng.unit() - 0.5) * 20.0;
      rewards.push_back(r);
      max_abs = std::max(max_abs, std::abs(r));
    }
    auto adv = metrics::grpo_advantages(rewards);
    double sum = 0.0;
    for (double a : adv) sum += a;
    CHECK(std::abs(sum) <= 1e-12 * static_cast<double>(k) * std::max(max_abs, 1.0));
  }
}

TEST_CASE("clipped objective matches the hand-computed example") {
  metrics::GrpoGroup group;
  group.rewards = {0.0, 2.0};
  group.ratios = {0.5, 1.3};
  group.epsilon = 0.2;
  CHECK(metrics::grpo_clipped_objective(group) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("clipped objective matches a brute-force oracle") {
  util::Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    metrics::GrpoGroup group;
    std::size_t k = 2 + rng.below(6);
    for (std::size_t i = 0; i < k; ++i) {
      group.rewards.push_back((rng.unit() - 0.5) * 10.0);
      group.ratios.push_back(0.05 + rng.unit() * 2.0);
    }
    group.epsilon = 0.05 + rng.unit() * 0.9;
    double expected = oracle_clipped_objective(group.rewards, group.ratios, group.epsilon);
    double got = metrics::grpo_clipped_objective(group);
    CHECK(got == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("clipped objective validates its inputs") {
  metrics::GrpoGroup ok;
  ok.rewards = {1.0, 2.0};
  ok.ratios = {1.0, 1.0};

  auto bad_len = ok;
  bad_len.ratios.pop_back();
  CHECK_THROWS_AS(metrics::grpo_clipped_objective(bad_len), ContractError);

  auto bad_eps = ok;
  bad_eps.epsilon = 0.0;
  CHECK_THROWS_AS(metrics::grpo_clipped_objective(bad_eps), ContractError);
  bad_eps.epsilon = 1.0;
  CHECK_THROWS_AS(metrics::grpo_clipped_objective(bad_eps), ContractError);

  auto bad_ratio = ok;
  bad_ratio.ratios[0] = 0.0;
  CHECK_THROWS_AS(metrics::grpo_clipped_objective(bad_ratio), ContractError);

  auto tiny = ok;
  tiny.rewards = {1.0};
  tiny.ratios = {1.0};
  CHECK_THROWS_AS(metrics::grpo_clipped_objective(tiny), ContractError);
}

TEST_CASE("confusion matrix is column-normalized over targets") {
  std::vector<std::pair<int, int>> pairs{{1, 1}, {1, 2}, {2, 2}, {2, 2}, {5, 3}};
  auto m = metrics::ConfusionMatrix::from_pairs(pairs);

  CHECK(m.count(1, 1) == 1);
  CHECK(m.count(2, 1) == 1);
  CHECK(m.column_total(1) == 2);
  CHECK(m.at(1, 1) == doctest::Approx(0.5));
  CHECK(m.at(2, 1) == doctest::Approx(0.5));
  CHECK(m.at(2, 2) == doctest::Approx(1.0));
  CHECK(m.at(3, 5) == doctest::Approx(1.0));
  CHECK(m.column_total(4) == 0);
  for (int realized = 1; realized <= 5; ++realized) {
    CHECK(m.at(realized, 4) == doctest::Approx(0.0));
  }

  auto csv = m.to_csv();
  CHECK(csv.find("realized\\target") == 0);
  auto doc = m.to_json();
  CHECK(doc.at("layout").get<std::string>().find("column-normalized") != std::string::npos);
  CHECK_THROWS_AS(metrics::ConfusionMatrix::from_pairs({{0, 1}}), ContractError);
}

TEST_CASE("nonzero confusion columns sum to one") {
  util::Rng rng(7);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 500; ++i) {
    pairs.emplace_back(rng.range(1, 5), rng.range(1, 5));
  }
  auto m = metrics::ConfusionMatrix::from_pairs(pairs);
  for (int target = 1; target <= 5; ++target) {
    if (m.column_total(target) == 0) {
      continue;
    }
    double sum = 0.0;
    for (int realized = 1; realized <= 5; ++realized) {
      sum += m.at(realized, target);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pairwise agreement matches the hand-counted fixture") {
  // Metric prefers the higher score; the human agrees on four of six pairs.
  std::vector<metrics::AgreementItem> items{
      {5, 1, 'a'},  // agree, gap 4
      {4, 2, 'a'},  // agree, gap 2
      {1, 3, 'b'},  // agree, gap 2
      {2, 5, 'b'},  // agree, gap 3
      {5, 2, 'b'},  // disagree, gap 3
      {1, 4, 'a'},  // disagree, gap 3
  };
  auto stats = metrics::pairwise_agreement(items);
  CHECK(stats.total == 6);
  CHECK(stats.agreements == 4);
  CHECK(stats.agreement_rate == doctest::Approx(2.0 / 3.0));
  CHECK(stats.rank_correlation == doctest::Approx(1.0 / 3.0));

  CHECK(stats.by_gap.at(4).count == 1);
  CHECK(stats.by_gap.at(4).agreements == 1);
  CHECK(stats.by_gap.at(2).count == 2);
  CHECK(stats.by_gap.at(2).agreements == 2);
  CHECK(stats.by_gap.at(3).count == 3);
  CHECK(stats.by_gap.at(3).agreements == 1);
  CHECK(stats.by_gap.at(3).agreement_rate == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(metrics::pairwise_agreement({{3, 3, 'a'}}), ContractError);
  CHECK_THROWS_AS(metrics::pairwise_agreement({{2, 3, 'x'}}), ContractError);
}

TEST_CASE("win rates are exact fractions that partition one") {
  using metrics::WinVerdict;
  auto rate = metrics::win_rate(
      {WinVerdict::win, WinVerdict::win, WinVerdict::lose, WinVerdict::tie});
  CHECK(rate.win == util::Ratio(1, 2));
  CHECK(rate.lose == util::Ratio(1, 4));
  CHECK(rate.tie == util::Ratio(1, 4));
  CHECK(rate.win + rate.lose + rate.tie == util::Ratio(1, 1));
  CHECK_THROWS_AS(metrics::win_rate({}), ContractError);
}

TEST_CASE("annotation pairs draw distinct scores per query") {
  std::map<std::string, std::vector<metrics::ScoredResponse>> groups;
  groups["q1"] = {{"r1", 2}, {"r2", 4}, {"r3", 2}};
  groups["q2"] = {{"r4", 3}, {"r5", 3}};  // indistinguishable, must be skipped
  groups["q3"] = {{"r6", 1}, {"r7", 5}};

  auto sample = metrics::sample_annotation_pairs(groups, 31);
  CHECK(sample.pairs.size() == 2);
  CHECK(sample.skipped_queries == std::vector<std::string>{"q2"});
  for (const auto& pair : sample.pairs) {
    CHECK(pair.a.md_score != pair.b.md_score);
  }

  auto again = metrics::sample_annotation_pairs(groups, 31);
  for (std::size_t i = 0; i < sample.pairs.size(); ++i) {
    CHECK(again.pairs[i].a.response_id == sample.pairs[i].a.response_id);
    CHECK(again.pairs[i].b.response_id == sample.pairs[i].b.response_id);
  }
}

TEST_CASE("eval reports aggregate per cell and globally") {
  std::vector<metrics::EvalEntry> entries{
      {"research", "revise", 4, 2, "none"},            // delta 2
      {"research", "revise", 3, 3, "none"},            // delta 0
      {"research", "plan_design", 5, 1, "low"},        // delta 4
      {"tutoring", "concept_explanation", 2, 2, "low"} // delta 0
  };
  auto report = metrics::build_eval_report(entries);
  CHECK(report.total == 4);
  CHECK(report.cells.at("research").at("revise").count == 2);
  CHECK(report.cells.at("research").at("revise").mean_delta == doctest::Approx(1.0));
  CHECK(report.cells.at("research").at("plan_design").mean_delta == doctest::Approx(4.0));
  CHECK(report.cells.at("tutoring").at("concept_explanation").mean_delta ==
        doctest::Approx(0.0));
  CHECK(report.global_mean_delta == doctest::Approx(6.0 / 4.0));

  // The global mean equals the count-weighted mean over cells.
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& [scenario, row] : report.cells) {
    for (const auto& [task, cell] : row) {
      weighted += cell.mean_delta * static_cast<double>(cell.count);
      n += cell.count;
    }
  }
  CHECK(report.global_mean_delta ==
        doctest::Approx(weighted / static_cast<double>(n)).epsilon(1e-12));

  CHECK(report.mode_distributions.at("none")[3] == 1);  // md 4
  CHECK(report.mode_distributions.at("none")[2] == 1);  // md 3
  CHECK(report.mode_distributions.at("low")[4] == 1);   // md 5
  CHECK(report.mode_distributions.at("low")[1] == 1);   // md 2

  auto csv = metrics::report_to_csv(report);
  CHECK(csv.find("scenario,task,count,mean_delta_align") == 0);
  CHECK(csv.find("all,all,4") != std::string::npos);
  auto text = metrics::report_to_text(report);
  CHECK(text.find("global mean over 4 records") != std::string::npos);
  auto doc = metrics::report_to_json(report);
  CHECK(doc.contains("cells"));
  CHECK(doc.at("global").at("count") == 4);
  CHECK(doc.at("global").at("mean_delta_align").get<double>() == doctest::Approx(1.5));
}

TEST_CASE("preference expressions have stable ids") {
  CHECK(metrics::expression_id(metrics::PreferenceExpression::natural) == "natural");
  CHECK(metrics::expression_from_id("tag") == metrics::PreferenceExpression::tag);
  CHECK(metrics::expression_from_id("rubric") == metrics::PreferenceExpression::rubric);
  CHECK_THROWS_AS(metrics::expression_from_id("casual"), SchemaError);
  Preference p{4, metrics::PreferenceExpression::rubric};
  nlohmann::json j = p;
  auto back = j.get<Preference>();
  CHECK(back.value == 4);
  CHECK(back.expression == metrics::PreferenceExpression::rubric);
}
