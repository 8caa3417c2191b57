#include <doctest.h>

#include <set>

#include "memsteer/errors.hpp"
#include "memsteer/scenario.hpp"

using namespace memsteer;

TEST_CASE("builtin research vocabulary") {
  const auto& s = scenario::builtin(scenario::ScenarioName::research);
  CHECK(s.event_types == std::vector<std::string>{"proposal", "method_design",
                                                  "pilot_experiments", "main_experiments",
                                                  "analysis", "writing"});
  CHECK(s.artifact_types == std::vector<std::string>{"research_goals", "research_plan",
                                                     "method", "experiment_results",
                                                     "paper_paragraph"});
}

TEST_CASE("builtin tutoring vocabulary") {
  const auto& s = scenario::builtin(scenario::ScenarioName::tutoring);
  CHECK(s.event_types == std::vector<std::string>{"objective_clarification", "plan_milestones",
                                                  "lesson", "practice", "review",
                                                  "materials_revision"});
  CHECK(s.artifact_types == std::vector<std::string>{"learning_objectives", "study_plan",
                                                     "teaching_notes", "practice_record",
                                                     "feedback_summary"});
}

TEST_CASE("unknown type ids are schema errors") {
  const auto& s = scenario::builtin(scenario::ScenarioName::research);
  CHECK_NOTHROW(s.require_event_type("analysis"));
  CHECK_NOTHROW(s.require_artifact_type("method"));
  CHECK_THROWS_AS(s.require_event_type("lesson"), SchemaError);
  CHECK_THROWS_AS(s.require_artifact_type("study_plan"), SchemaError);
  CHECK_THROWS_WITH(s.require_event_type("nope"),
                    doctest::Contains("unknown event type id: nope"));
}

TEST_CASE("scenario ids round-trip") {
  CHECK(scenario::scenario_id(scenario::ScenarioName::research) == "research");
  CHECK(scenario::scenario_from_id("tutoring") == scenario::ScenarioName::tutoring);
  CHECK_THROWS_AS(scenario::scenario_from_id("other"), SchemaError);
}

TEST_CASE("scenario json round-trip and validation") {
  const auto& s = scenario::builtin(scenario::ScenarioName::research);
  auto doc = scenario::scenario_to_json(s);
  auto back = scenario::scenario_from_json(doc);
  CHECK(back.event_types == s.event_types);
  CHECK(back.artifact_types == s.artifact_types);

  auto bad = doc;
  bad["event_types"] = {"only_one"};
  CHECK_THROWS_AS(scenario::scenario_from_json(bad), SchemaError);
  auto dup = doc;
  dup["artifact_types"][1] = dup["artifact_types"][0];
  CHECK_THROWS_AS(scenario::scenario_from_json(dup), SchemaError);
}

TEST_CASE("goal sentences exist per scenario") {
  auto research = scenario::goal_sentence(scenario::ScenarioName::research);
  auto tutoring = scenario::goal_sentence(scenario::ScenarioName::tutoring);
  CHECK_FALSE(research.empty());
  CHECK_FALSE(tutoring.empty());
  CHECK(research != tutoring);
}

TEST_CASE("topic bank has 100 unique topics per scenario") {
  auto bank = scenario::TopicBank::builtin();
  auto research = bank.for_scenario(scenario::ScenarioName::research);
  auto tutoring = bank.for_scenario(scenario::ScenarioName::tutoring);
  CHECK(research.size() == 100);
  CHECK(tutoring.size() == 100);

  std::set<std::string> ids;
  std::set<std::string> titles;
  for (const auto& t : bank.topics()) {
    ids.insert(t.id);
    titles.insert(t.title);
    CHECK_FALSE(t.subject.empty());
  }
  CHECK(ids.size() == 200);
  CHECK(titles.size() == 200);
  CHECK(titles.count("Curriculum learning for foundation models") == 1);

  const auto& first = bank.by_id("research-000");
  CHECK(first.scenario == scenario::ScenarioName::research);
  CHECK_THROWS_AS(bank.by_id("research-999"), SchemaError);
}

TEST_CASE("topic json round-trip") {
  auto bank = scenario::TopicBank::builtin();
  const auto& t = bank.by_id("tutoring-042");
  nlohmann::json j = t;
  auto back = j.get<scenario::Topic>();
  CHECK(back.id == t.id);
  CHECK(back.title == t.title);
  CHECK(back.subject == t.subject);
  CHECK(back.scenario == t.scenario);
}
