#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsteer/scenario.hpp"
#include "memsteer/timeline.hpp"

namespace memsteer::querygen {

enum class TaskCategory {
  plan_design,
  revise,
  analyze_critique,
  concept_explanation,
};

std::string task_id(TaskCategory task);
TaskCategory task_from_id(const std::string& id);
const std::vector<TaskCategory>& all_tasks();

struct Query {
  std::string id;
  std::string topic_ref;
  int event_index = 0;
  TaskCategory task = TaskCategory::plan_design;
  std::string target_type;
  int target_version = 0;  // 0 = not yet materialized (plan/explain tasks only)
  std::string text;
};

void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);

/// Every (task, target) pair allowed at this artifact state: Revise and
/// AnalyzeCritique need the target present; PlanDesign and ConceptExplanation
/// accept any scenario artifact type. Order is deterministic (task order x
/// scenario artifact order).
std::vector<std::pair<TaskCategory, scenario::ArtifactTypeId>> feasible_tasks(
    const timeline::ArtifactSet& artifacts, const scenario::Scenario& scenario);

/// Query text templates keyed by (scenario, task); >= 2 per slot, chosen by
/// seeded pick. {target} and {topic} slots are substituted.
class TemplateBank {
 public:
  static TemplateBank builtin();
  static TemplateBank from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::vector<std::string>& templates(scenario::ScenarioName name,
                                            TaskCategory task) const;
  void add(scenario::ScenarioName name, TaskCategory task, std::string tmpl);

 private:
  // keyed by "<scenario>/<task>"
  std::map<std::string, std::vector<std::string>> slots_;
};

/// Renders one query from (event, task, target). The target artifact may be a
/// version-0 placeholder for tasks that do not require an existing artifact.
Query instantiate_query(const timeline::Event& event, TaskCategory task,
                        const timeline::Artifact& target, const scenario::Topic& topic,
                        const TemplateBank& templates, std::uint64_t rng_seed);

/// Samples n queries from a timeline: uniform event index, uniform feasible
/// (task, target) pair, seeded template choice.
std::vector<Query> sample_queries(const timeline::Timeline& timeline, int n,
                                  const TemplateBank& templates, std::uint64_t seed);

}  // namespace memsteer::querygen
