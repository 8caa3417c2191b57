#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "memsteer/datagen.hpp"
#include "memsteer/errors.hpp"
#include "memsteer/judge.hpp"
#include "memsteer/memory.hpp"
#include "memsteer/metrics.hpp"
#include "memsteer/querygen.hpp"
#include "memsteer/scenario.hpp"
#include "memsteer/timeline.hpp"
#include "memsteer/util.hpp"

using namespace memsteer;

namespace {

querygen::Query sample_query() {
  querygen::Query q;
  q.id = "research-000-t3-revise-research_plan-s1-i0";
  q.topic_ref = "research-000";
  q.event_index = 3;
  q.task = querygen::TaskCategory::revise;
  q.target_type = "research_plan";
  q.target_version = 1;
  q.text = "Revise the research plan for curriculum learning.";
  return q;
}

memory::MemoryBundle bundle_with_words(const std::vector<std::string>& words) {
  memory::MemoryBundle b;
  b.query_ref = "q";
  b.profile = util::join(words, " ");
  return b;
}

timeline::Timeline make_timeline(scenario::ScenarioName name, std::uint64_t seed) {
  const auto topics = scenario::TopicBank::builtin().for_scenario(name);
  timeline::ScriptedProposer proposer(
      scenario::builtin(name), {.target_len = 8, .invalid_rate = 0.2, .seed = seed});
  timeline::AcceptAllValidator validator;
  return timeline::synthesize_timeline(topics.front(), proposer, validator,
                                       {.max_len = 12, .max_retries_per_step = 3});
}

class EchoSimulator : public datagen::UserSimulator {
 public:
  std::string rewrite(const querygen::Query& query, int, int) override { return query.text; }
};

class EchoOnceSimulator : public datagen::UserSimulator {
 public:
  std::string rewrite(const querygen::Query& query, int preference, int attempt) override {
    if (attempt == 1) {
      return query.text;
    }
    return "retry " + std::to_string(preference) + ": " + query.text;
  }
};

class FailingPolicy : public datagen::PolicyBackend {
 public:
  std::string id() const override { return "dead-backend"; }
  judge::Response generate(const datagen::AugmentedQuery&, const memory::MemoryBundle&,
                           int) override {
    throw TransportError("connection refused");
  }
};

}  // namespace

TEST_CASE("preference tags cover the five levels in order") {
  const auto& tags = datagen::preference_tags();
  REQUIRE(tags.size() == 5);
  CHECK(tags == std::vector<std::string>{"Minimal", "Low", "Medium", "High", "Maximal"});
}

TEST_CASE("scripted simulator prepends a distinct framing per preference") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();
  std::set<std::string> seen;
  for (int p = 1; p <= 5; ++p) {
    auto text = sim.rewrite(q, p, 1);
    CHECK(util::contains(text, q.text));
    CHECK(text != q.text);
    seen.insert(text);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS_AS(sim.rewrite(q, 0, 1), ContractError);
  CHECK_THROWS_AS(sim.rewrite(q, 6, 1), ContractError);
}

TEST_CASE("tag expression appends the named tag") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();
  auto out = datagen::augment_query(
      q, metrics::Preference{4, metrics::PreferenceExpression::tag}, sim);
  CHECK(out.text == q.text + " [memory-dependence: High]");
  CHECK(out.base.id == q.id);
  CHECK(out.target_preference.value == 4);
  CHECK(out.target_preference.expression == metrics::PreferenceExpression::tag);
  CHECK_FALSE(out.realigned_to.has_value());
}

TEST_CASE("rubric expression prepends the explicit level instruction") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();
  auto out = datagen::augment_query(
      q, metrics::Preference{2, metrics::PreferenceExpression::rubric}, sim);
  CHECK(util::starts_with(
      out.text, "Follow memory-dependence level 2 (Lightly Contextualized / Ornamental "
                "Dependence). "));
  CHECK(util::contains(out.text, q.text));
}

TEST_CASE("natural expression delegates to the simulator") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();
  auto out = datagen::augment_query(
      q, metrics::Preference{5, metrics::PreferenceExpression::natural}, sim);
  CHECK(out.text == sim.rewrite(q, 5, 1));
  CHECK(out.text != q.text);
}

TEST_CASE("augment rejects out-of-range preferences") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();
  CHECK_THROWS_AS(datagen::augment_query(
                      q, metrics::Preference{0, metrics::PreferenceExpression::tag}, sim),
                  ContractError);
  CHECK_THROWS_AS(datagen::augment_query(
                      q, metrics::Preference{6, metrics::PreferenceExpression::tag}, sim),
                  ContractError);
}

TEST_CASE("verbatim echo is retried once then rejected") {
  auto q = sample_query();
  metrics::Preference p{3, metrics::PreferenceExpression::natural};

  EchoOnceSimulator flaky;
  auto out = datagen::augment_query(q, p, flaky);
  CHECK(util::starts_with(out.text, "retry 3: "));

  EchoSimulator stuck;
  CHECK_THROWS_WITH_AS(datagen::augment_query(q, p, stuck),
                       doctest::Contains(q.id.c_str()), RewriteError);
}

TEST_CASE("realignment stamps the realized score") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();
  auto out = datagen::realign_query(q, 4, metrics::PreferenceExpression::tag, sim);
  REQUIRE(out.realigned_to.has_value());
  CHECK(*out.realigned_to == 4);
  CHECK(out.target_preference.value == 4);
  CHECK(out.text == q.text + " [memory-dependence: High]");
  CHECK_THROWS_AS(datagen::realign_query(q, 0, metrics::PreferenceExpression::tag, sim),
                  ContractError);
  CHECK_THROWS_AS(datagen::realign_query(q, 6, metrics::PreferenceExpression::tag, sim),
                  ContractError);
}

TEST_CASE("steering without jitter lands each judged level exactly") {
  judge::HeuristicJudge hj;
  datagen::BuiltinPolicy policy("steer", 11, false);
  memory::TruncationSummarizer summarizer;
  auto bank = querygen::TemplateBank::builtin();

  for (auto name : {scenario::ScenarioName::research, scenario::ScenarioName::tutoring}) {
    auto tl = make_timeline(name, 5);
    auto queries = querygen::sample_queries(tl, 4, bank, 9);
    for (const auto& q : queries) {
      auto bundle = memory::build_memory(tl, q, summarizer, 2);
      for (int level = 1; level <= 5; ++level) {
        judge::Response r;
        r.text = policy.generate_text(level, bundle, q.target_type,
                                      util::derive_seed(3, q.id + std::to_string(level)));
        auto verdict = judge::score_memory_dependence(r, q, bundle, hj);
        CAPTURE(q.id);
        CAPTURE(level);
        CHECK(verdict.md_score == level);
      }
    }
  }
}

TEST_CASE("steering stays exact on tiny bundles with novel type mentions") {
  judge::HeuristicJudge hj;
  datagen::BuiltinPolicy policy("steer", 11, false);
  auto q = sample_query();
  q.target_type = "survey_memo";  // neither word below

  for (std::size_t m : {1u, 2u, 3u, 5u, 9u}) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < m; ++i) {
      words.push_back("item" + std::to_string(i));
    }
    auto bundle = bundle_with_words(words);
    for (int level = 1; level <= 5; ++level) {
      judge::Response r;
      r.text = policy.generate_text(level, bundle, q.target_type, 1000 * m + level);
      auto verdict = judge::score_memory_dependence(r, q, bundle, hj);
      CAPTURE(m);
      CAPTURE(level);
      CHECK(verdict.md_score == level);
    }
  }
}

TEST_CASE("empty memory forces the lowest level") {
  datagen::BuiltinPolicy policy("steer", 11, false);
  memory::MemoryBundle empty;
  for (int level = 1; level <= 5; ++level) {
    auto text = policy.generate_text(level, empty, "research_plan", 7);
    judge::HeuristicJudge hj;
    judge::Response r;
    r.text = text;
    auto verdict = judge::score_memory_dependence(r, sample_query(), empty, hj);
    CHECK(verdict.md_score == 1);
  }
}

TEST_CASE("anchored generation defaults to heavy reliance") {
  judge::HeuristicJudge hj;
  datagen::BuiltinPolicy policy("steer", 11, false);
  memory::TruncationSummarizer summarizer;
  auto tl = make_timeline(scenario::ScenarioName::research, 5);
  auto queries = querygen::sample_queries(tl, 2, querygen::TemplateBank::builtin(), 9);
  auto bundle = memory::build_memory(tl, queries.front(), summarizer, 2);

  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    judge::Response r;
    r.text = policy.generate_text(std::nullopt, bundle, queries.front().target_type, seed);
    auto verdict = judge::score_memory_dependence(r, queries.front(), bundle, hj);
    REQUIRE(verdict.md_score >= 4);
    seen.insert(verdict.md_score);
  }
  CHECK(seen == std::set<int>{4, 5});
}

TEST_CASE("jitter wobbles the conveyed level by at most one") {
  judge::HeuristicJudge hj;
  datagen::BuiltinPolicy policy("steer", 11, true);
  memory::TruncationSummarizer summarizer;
  auto tl = make_timeline(scenario::ScenarioName::tutoring, 5);
  auto queries = querygen::sample_queries(tl, 2, querygen::TemplateBank::builtin(), 9);
  auto bundle = memory::build_memory(tl, queries.front(), summarizer, 2);

  std::map<int, int> hist;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    judge::Response r;
    r.text = policy.generate_text(3, bundle, queries.front().target_type, seed);
    auto verdict = judge::score_memory_dependence(r, queries.front(), bundle, hj);
    REQUIRE(verdict.md_score >= 2);
    REQUIRE(verdict.md_score <= 4);
    ++hist[verdict.md_score];
  }
  CHECK(hist[3] > hist[2]);
  CHECK(hist[3] > hist[4]);
  CHECK(hist[2] > 0);
  CHECK(hist[4] > 0);
}

TEST_CASE("generate_text rejects out-of-range targets") {
  datagen::BuiltinPolicy policy("steer", 11, false);
  auto bundle = bundle_with_words({"alpha", "beta"});
  CHECK_THROWS_AS(policy.generate_text(0, bundle, "method", 1), ContractError);
  CHECK_THROWS_AS(policy.generate_text(6, bundle, "method", 1), ContractError);
}

TEST_CASE("builtin policy stamps provenance onto responses") {
  datagen::ScriptedSimulator sim;
  datagen::BuiltinPolicy policy("builtin-a", 17);
  auto q = sample_query();
  auto aug = datagen::augment_query(
      q, metrics::Preference{2, metrics::PreferenceExpression::tag}, sim);
  auto bundle = bundle_with_words({"alpha", "beta", "gamma", "delta", "epsilon"});

  auto r0 = policy.generate(aug, bundle, 0);
  CHECK(r0.producer == "builtin-a");
  CHECK(r0.query_ref == q.id);
  CHECK(r0.prompt_mode == "preference:2");
  CHECK_FALSE(r0.text.empty());

  auto again = policy.generate(aug, bundle, 0);
  CHECK(again.text == r0.text);
}

TEST_CASE("candidate sampling records backend failures without aborting") {
  datagen::ScriptedSimulator sim;
  datagen::BuiltinPolicy a("builtin-a", 17);
  datagen::BuiltinPolicy b("builtin-b", 23);
  FailingPolicy dead;
  auto q = sample_query();
  auto aug = datagen::augment_query(
      q, metrics::Preference{3, metrics::PreferenceExpression::tag}, sim);
  auto bundle = bundle_with_words({"alpha", "beta", "gamma", "delta", "epsilon"});

  auto both = datagen::sample_candidates(aug, bundle, {&a, &b}, 2);
  REQUIRE(both.responses.size() == 4);
  CHECK(both.errors.empty());
  CHECK(both.responses[0].producer == "builtin-a");
  CHECK(both.responses[1].producer == "builtin-a");
  CHECK(both.responses[2].producer == "builtin-b");
  CHECK(both.responses[3].producer == "builtin-b");

  auto partial = datagen::sample_candidates(aug, bundle, {&dead, &b}, 2);
  CHECK(partial.responses.size() == 2);
  REQUIRE(partial.errors.size() == 1);
  CHECK(util::contains(partial.errors[0], "dead-backend"));
  CHECK(util::contains(partial.errors[0], "connection refused"));

  CHECK_THROWS_AS(datagen::sample_candidates(aug, bundle, {}, 2), ContractError);
}

TEST_CASE("quality filter keeps the best-scoring records per base query") {
  datagen::ScriptedSimulator sim;
  auto q1 = sample_query();
  auto q2 = sample_query();
  q2.id = "research-000-t4-revise-research_plan-s1-i1";

  auto rec = [&](const querygen::Query& q, const std::string& id, int task, double general) {
    datagen::TrainingRecord r;
    r.id = id;
    r.query = datagen::augment_query(
        q, metrics::Preference{3, metrics::PreferenceExpression::tag}, sim);
    r.verdicts = metrics::VerdictScores{3, task, general};
    r.split = "sft";
    return r;
  };

  std::vector<datagen::TrainingRecord> pool = {
      rec(q1, q1.id + "#a#0", 3, 2.0),
      rec(q1, q1.id + "#a#1", 5, 1.0),  // sum 6.0: the q1 winner
      rec(q1, q1.id + "#b#0", 4, 2.0),  // sum 6.0: tie, loses on id
      rec(q2, q2.id + "#a#0", 2, 0.5),
  };

  auto kept = datagen::quality_filter(pool, 1);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == q1.id + "#a#1");
  CHECK(kept[1].id == q2.id + "#a#0");

  auto kept2 = datagen::quality_filter(pool, 2);
  REQUIRE(kept2.size() == 3);
  CHECK(kept2[0].id == q1.id + "#a#1");
  CHECK(kept2[1].id == q1.id + "#b#0");

  CHECK_THROWS_AS(datagen::quality_filter(pool, 0), ContractError);

  datagen::TrainingRecord unjudged;
  unjudged.id = "x";
  unjudged.query = pool[0].query;
  CHECK_THROWS_AS(datagen::quality_filter({unjudged}, 1), ContractError);
}

TEST_CASE("datagen run produces aligned SFT and disjoint RL records") {
  std::vector<timeline::Timeline> timelines;
  timelines.push_back(make_timeline(scenario::ScenarioName::research, 5));
  timelines.push_back(make_timeline(scenario::ScenarioName::tutoring, 6));
  timelines.push_back(make_timeline(scenario::ScenarioName::research, 7));

  datagen::DatagenConfig config;
  config.n_sft = 6;
  config.n_rl = 3;
  config.keep = 1;
  config.n_per_policy = 2;
  config.window = 2;
  config.seed = 42;
  config.expression = metrics::PreferenceExpression::tag;

  datagen::ScriptedSimulator sim;
  judge::HeuristicJudge hj;
  judge::HashGeneralScorer scorer;
  datagen::BuiltinPolicy a("builtin-a", 17);
  datagen::BuiltinPolicy b("builtin-b", 23);
  std::vector<datagen::PolicyBackend*> policies = {&a, &b};
  auto bank = querygen::TemplateBank::builtin();

  auto result = datagen::run_datagen(timelines, config, sim, hj, scorer, policies, bank);

  REQUIRE(result.sft.size() == 6);
  REQUIRE(result.rl.size() == 3);

  std::set<std::string> sft_bases;
  for (const auto& r : result.sft) {
    CHECK(r.split == "sft");
    REQUIRE(r.response.has_value());
    REQUIRE(r.verdicts.has_value());
    REQUIRE(r.query.realigned_to.has_value());
    CHECK(*r.query.realigned_to == r.verdicts->md);
    const auto& tag = datagen::preference_tags()[static_cast<std::size_t>(r.verdicts->md - 1)];
    CHECK(r.query.text == r.query.base.text + " [memory-dependence: " + tag + "]");
    CHECK(r.verdicts->general >= 0.0);
    CHECK(r.verdicts->general <= 5.0);
    sft_bases.insert(r.query.base.id);
  }
  for (const auto& r : result.rl) {
    CHECK(r.split == "rl");
    CHECK_FALSE(r.response.has_value());
    CHECK_FALSE(r.verdicts.has_value());
    CHECK_FALSE(r.query.realigned_to.has_value());
    CHECK_FALSE(sft_bases.contains(r.query.base.id));
  }

  auto rerun = datagen::run_datagen(timelines, config, sim, hj, scorer, policies, bank);
  REQUIRE(rerun.sft.size() == result.sft.size());
  for (std::size_t i = 0; i < result.sft.size(); ++i) {
    nlohmann::json lhs = result.sft[i];
    nlohmann::json rhs = rerun.sft[i];
    CHECK(lhs == rhs);
  }

  CHECK_THROWS_AS(
      datagen::run_datagen({}, config, sim, hj, scorer, policies, bank), ContractError);
}

TEST_CASE("training records survive serialization in both splits") {
  datagen::ScriptedSimulator sim;
  auto q = sample_query();

  datagen::TrainingRecord sft;
  sft.id = q.id + "#builtin-a#0";
  sft.query = datagen::realign_query(q, 2, metrics::PreferenceExpression::tag, sim);
  sft.memory = bundle_with_words({"alpha", "beta"});
  judge::Response resp;
  resp.text = "some text";
  resp.producer = "builtin-a";
  resp.prompt_mode = "preference:2";
  resp.query_ref = q.id;
  sft.response = resp;
  sft.verdicts = metrics::VerdictScores{2, 4, 3.25};
  sft.general_raw = 13.0;
  sft.split = "sft";

  nlohmann::json j = sft;
  auto back = j.get<datagen::TrainingRecord>();
  CHECK(back.id == sft.id);
  CHECK(back.query.text == sft.query.text);
  REQUIRE(back.query.realigned_to.has_value());
  CHECK(*back.query.realigned_to == 2);
  REQUIRE(back.response.has_value());
  CHECK(back.response->producer == "builtin-a");
  REQUIRE(back.verdicts.has_value());
  CHECK(back.verdicts->md == 2);
  CHECK(back.verdicts->task == 4);
  CHECK(back.verdicts->general == doctest::Approx(3.25));
  CHECK(back.general_raw == doctest::Approx(13.0));

  datagen::TrainingRecord rl;
  rl.id = q.id + "#rl";
  rl.query = datagen::augment_query(
      q, metrics::Preference{5, metrics::PreferenceExpression::rubric}, sim);
  rl.memory = sft.memory;
  rl.split = "rl";

  nlohmann::json jr = rl;
  CHECK(jr.at("response").is_null());
  CHECK(jr.at("verdicts").is_null());
  auto rback = jr.get<datagen::TrainingRecord>();
  CHECK_FALSE(rback.response.has_value());
  CHECK_FALSE(rback.verdicts.has_value());
  CHECK(rback.split == "rl");
}
