#include "memsteer/scenario.hpp"

#include <algorithm>
#include <set>

#include "memsteer/errors.hpp"

namespace memsteer::scenario {

std::string scenario_id(ScenarioName name) {
  switch (name) {
    case ScenarioName::research:
      return "research";
    case ScenarioName::tutoring:
      return "tutoring";
  }
  throw ContractError("unknown scenario enum value");
}

ScenarioName scenario_from_id(const std::string& id) {
  if (id == "research") {
    return ScenarioName::research;
  }
  if (id == "tutoring") {
    return ScenarioName::tutoring;
  }
  throw SchemaError("unknown scenario id: " + id);
}

bool Scenario::has_event_type(const std::string& id) const {
  return std::find(event_types.begin(), event_types.end(), id) != event_types.end();
}

bool Scenario::has_artifact_type(const std::string& id) const {
  return std::find(artifact_types.begin(), artifact_types.end(), id) != artifact_types.end();
}

void Scenario::require_event_type(const std::string& id) const {
  if (!has_event_type(id)) {
    throw SchemaError("unknown event type id: " + id);
  }
}

void Scenario::require_artifact_type(const std::string& id) const {
  if (!has_artifact_type(id)) {
    throw SchemaError("unknown artifact type id: " + id);
  }
}

const Scenario& builtin(ScenarioName name) {
  static const Scenario research{
      ScenarioName::research,
      {"proposal", "method_design", "pilot_experiments", "main_experiments", "analysis",
       "writing"},
      {"research_goals", "research_plan", "method", "experiment_results", "paper_paragraph"},
  };
  static const Scenario tutoring{
      ScenarioName::tutoring,
      {"objective_clarification", "plan_milestones", "lesson", "practice", "review",
       "materials_revision"},
      {"learning_objectives", "study_plan", "teaching_notes", "practice_record",
       "feedback_summary"},
  };
  return name == ScenarioName::research ? research : tutoring;
}

const std::vector<Scenario>& all_builtin() {
  static const std::vector<Scenario> all = {builtin(ScenarioName::research),
                                            builtin(ScenarioName::tutoring)};
  return all;
}

Scenario scenario_from_json(const nlohmann::json& doc) {
  Scenario out;
  out.name = scenario_from_id(doc.at("name").get<std::string>());
  out.event_types = doc.at("event_types").get<std::vector<std::string>>();
  out.artifact_types = doc.at("artifact_types").get<std::vector<std::string>>();
  if (out.event_types.size() != 6) {
    throw SchemaError("scenario " + scenario_id(out.name) + " must declare 6 event types");
  }
  if (out.artifact_types.size() != 5) {
    throw SchemaError("scenario " + scenario_id(out.name) + " must declare 5 artifact types");
  }
  std::set<std::string> seen(out.event_types.begin(), out.event_types.end());
  if (seen.size() != out.event_types.size()) {
    throw SchemaError("duplicate event type in scenario " + scenario_id(out.name));
  }
  seen = std::set<std::string>(out.artifact_types.begin(), out.artifact_types.end());
  if (seen.size() != out.artifact_types.size()) {
    throw SchemaError("duplicate artifact type in scenario " + scenario_id(out.name));
  }
  return out;
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
  return nlohmann::json{
      {"name", scenario_id(scenario.name)},
      {"event_types", scenario.event_types},
      {"artifact_types", scenario.artifact_types},
  };
}

std::string goal_sentence(ScenarioName name) {
  if (name == ScenarioName::research) {
    return "The user is leading a long-running research project and wants help that "
           "builds on the project's own plans, methods, and results.";
  }
  return "The user is following a long-running personalized study program and wants "
         "help that builds on their own objectives, plans, and practice history.";
}

void to_json(nlohmann::json& j, const Topic& t) {
  j = nlohmann::json{
      {"scenario", scenario_id(t.scenario)},
      {"subject", t.subject},
      {"title", t.title},
      {"id", t.id},
  };
}

void from_json(const nlohmann::json& j, Topic& t) {
  t.scenario = scenario_from_id(j.at("scenario").get<std::string>());
  t.subject = j.at("subject").get<std::string>();
  t.title = j.at("title").get<std::string>();
  t.id = j.at("id").get<std::string>();
}

namespace {

std::string pad3(std::size_t n) {
  std::string s = std::to_string(n);
  while (s.size() < 3) {
    s.insert(s.begin(), '0');
  }
  return s;
}

}  // namespace

TopicBank TopicBank::builtin() {
  TopicBank bank;
  bank.research_subjects_ = {"machine learning", "natural language processing",
                             "computer vision", "reinforcement learning", "data systems"};
  bank.tutoring_subjects_ = {"mathematics", "programming", "statistics", "physics",
                             "writing"};

  const std::vector<std::string> research_focuses = {
      "Curriculum learning",     "Contrastive pretraining", "Sparse attention",
      "Retrieval augmentation",  "Data deduplication",      "Preference optimization",
      "Mixture-of-experts routing", "Synthetic data scaling",  "Length extrapolation",
      "Uncertainty calibration",
  };
  const std::vector<std::string> research_areas = {
      "foundation models",       "dialogue agents",        "code generation",
      "scientific discovery",    "multimodal reasoning",   "recommendation systems",
      "time-series forecasting", "robotic manipulation",   "information retrieval",
      "speech recognition",
  };
  const std::vector<std::string> tutoring_skills = {
      "Linear algebra",        "Calculus fundamentals",  "Probability theory",
      "Python programming",    "Algorithm design",       "Statistical inference",
      "Classical mechanics",   "Technical writing",      "Data visualization",
      "Differential equations",
  };
  const std::vector<std::string> tutoring_goals = {
      "exam preparation",        "a semester capstone",      "research readiness",
      "competitive programming", "an engineering placement", "graduate admissions",
      "self-paced mastery",      "a career transition",      "teaching assistantship",
      "a certification track",
  };

  std::size_t counter = 0;
  for (std::size_t i = 0; i < research_focuses.size(); ++i) {
    for (std::size_t j = 0; j < research_areas.size(); ++j) {
      Topic t;
      t.scenario = ScenarioName::research;
      t.subject = bank.research_subjects_[counter % bank.research_subjects_.size()];
      t.title = research_focuses[i] + " for " + research_areas[j];
      t.id = "research-" + pad3(counter);
      bank.topics_.push_back(std::move(t));
      ++counter;
    }
  }
  counter = 0;
  for (std::size_t i = 0; i < tutoring_skills.size(); ++i) {
    for (std::size_t j = 0; j < tutoring_goals.size(); ++j) {
      Topic t;
      t.scenario = ScenarioName::tutoring;
      t.subject = bank.tutoring_subjects_[counter % bank.tutoring_subjects_.size()];
      t.title = tutoring_skills[i] + " for " + tutoring_goals[j];
      t.id = "tutoring-" + pad3(counter);
      bank.topics_.push_back(std::move(t));
      ++counter;
    }
  }
  return bank;
}

std::vector<Topic> TopicBank::for_scenario(ScenarioName name) const {
  std::vector<Topic> out;
  for (const auto& t : topics_) {
    if (t.scenario == name) {
      out.push_back(t);
    }
  }
  return out;
}

const Topic& TopicBank::by_id(const std::string& id) const {
  for (const auto& t : topics_) {
    if (t.id == id) {
      return t;
    }
  }
  throw SchemaError("unknown topic id: " + id);
}

const std::vector<std::string>& TopicBank::subjects(ScenarioName name) const {
  return name == ScenarioName::research ? research_subjects_ : tutoring_subjects_;
}

}  // namespace memsteer::scenario
