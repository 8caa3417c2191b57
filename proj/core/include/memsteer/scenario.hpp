#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memsteer::scenario {

using EventTypeId = std::string;
using ArtifactTypeId = std::string;

enum class ScenarioName {
  research,
  tutoring,
};

std::string scenario_id(ScenarioName name);
ScenarioName scenario_from_id(const std::string& id);

/// Per-scenario vocabulary of event and artifact types. The two built-in
/// tables can be overridden by loading a JSON config of the same shape.
struct Scenario {
  ScenarioName name;
  std::vector<EventTypeId> event_types;
  std::vector<ArtifactTypeId> artifact_types;

  bool has_event_type(const std::string& id) const;
  bool has_artifact_type(const std::string& id) const;

  /// Throws SchemaError naming the offending id.
  void require_event_type(const std::string& id) const;
  void require_artifact_type(const std::string& id) const;
};

const Scenario& builtin(ScenarioName name);
const std::vector<Scenario>& all_builtin();

/// Loads an override table; validates 6 event types and 5 artifact types,
/// unique names.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// One sentence of declared user goals, used in memory profiles.
std::string goal_sentence(ScenarioName name);

struct Topic {
  ScenarioName scenario;
  std::string subject;
  std::string title;
  std::string id;
};

void to_json(nlohmann::json& j, const Topic& t);
void from_json(const nlohmann::json& j, Topic& t);

/// Deterministic built-in bank: 100 titles per scenario, built from curated
/// focus x area grids.
class TopicBank {
 public:
  static TopicBank builtin();

  const std::vector<Topic>& topics() const { return topics_; }
  std::vector<Topic> for_scenario(ScenarioName name) const;
  const Topic& by_id(const std::string& id) const;
  const std::vector<std::string>& subjects(ScenarioName name) const;

 private:
  std::vector<Topic> topics_;
  std::vector<std::string> research_subjects_;
  std::vector<std::string> tutoring_subjects_;
};

}  // namespace memsteer::scenario
