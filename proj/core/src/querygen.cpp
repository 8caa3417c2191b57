#include "memsteer/querygen.hpp"

#include "memsteer/errors.hpp"
#include "memsteer/util.hpp"

namespace memsteer::querygen {

std::string task_id(TaskCategory task) {
  switch (task) {
    case TaskCategory::plan_design:
      return "plan_design";
    case TaskCategory::revise:
      return "revise";
    case TaskCategory::analyze_critique:
      return "analyze_critique";
    case TaskCategory::concept_explanation:
      return "concept_explanation";
  }
  throw ContractError("unknown task category");
}

TaskCategory task_from_id(const std::string& id) {
  if (id == "plan_design") {
    return TaskCategory::plan_design;
  }
  if (id == "revise") {
    return TaskCategory::revise;
  }
  if (id == "analyze_critique") {
    return TaskCategory::analyze_critique;
  }
  if (id == "concept_explanation") {
    return TaskCategory::concept_explanation;
  }
  throw SchemaError("unknown task category id: " + id);
}

const std::vector<TaskCategory>& all_tasks() {
  static const std::vector<TaskCategory> tasks = {
      TaskCategory::plan_design,
      TaskCategory::revise,
      TaskCategory::analyze_critique,
      TaskCategory::concept_explanation,
  };
  return tasks;
}

void to_json(nlohmann::json& j, const Query& q) {
  j = nlohmann::json{
      {"id", q.id},
      {"topic_ref", q.topic_ref},
      {"event_index", q.event_index},
      {"task", task_id(q.task)},
      {"target_type", q.target_type},
      {"target_version", q.target_version},
      {"text", q.text},
  };
}

void from_json(const nlohmann::json& j, Query& q) {
  q.id = j.at("id").get<std::string>();
  q.topic_ref = j.at("topic_ref").get<std::string>();
  q.event_index = j.at("event_index").get<int>();
  q.task = task_from_id(j.at("task").get<std::string>());
  q.target_type = j.at("target_type").get<std::string>();
  q.target_version = j.at("target_version").get<int>();
  q.text = j.at("text").get<std::string>();
}

std::vector<std::pair<TaskCategory, scenario::ArtifactTypeId>> feasible_tasks(
    const timeline::ArtifactSet& artifacts, const scenario::Scenario& scenario) {
  std::vector<std::pair<TaskCategory, scenario::ArtifactTypeId>> out;
  for (TaskCategory task : all_tasks()) {
    bool needs_existing =
        task == TaskCategory::revise || task == TaskCategory::analyze_critique;
    for (const auto& type : scenario.artifact_types) {
      if (needs_existing && !artifacts.has(type)) {
        continue;
      }
      out.emplace_back(task, type);
    }
  }
  return out;
}

TemplateBank TemplateBank::builtin() {
  using SN = scenario::ScenarioName;
  TemplateBank bank;

  bank.add(SN::research, TaskCategory::plan_design,
           "Draft the next {target} for {topic}.");
  bank.add(SN::research, TaskCategory::plan_design,
           "Lay out a {target} that moves {topic} forward.");
  bank.add(SN::research, TaskCategory::revise, "Revise the {target} for {topic}.");
  bank.add(SN::research, TaskCategory::revise,
           "Rework the current {target} of {topic} and fix its weak points.");
  bank.add(SN::research, TaskCategory::analyze_critique,
           "Critique the {target} we have for {topic}.");
  bank.add(SN::research, TaskCategory::analyze_critique,
           "Analyze the strengths and gaps of the {target} in {topic}.");
  bank.add(SN::research, TaskCategory::concept_explanation,
           "Explain what role the {target} plays in {topic}.");
  bank.add(SN::research, TaskCategory::concept_explanation,
           "Walk me through how a {target} is built for {topic}.");

  bank.add(SN::tutoring, TaskCategory::plan_design,
           "Put together a {target} for {topic}.");
  bank.add(SN::tutoring, TaskCategory::plan_design,
           "Design the next {target} to keep {topic} on track.");
  bank.add(SN::tutoring, TaskCategory::revise, "Revise the {target} for {topic}.");
  bank.add(SN::tutoring, TaskCategory::revise,
           "Update the {target} of {topic} based on how things are going.");
  bank.add(SN::tutoring, TaskCategory::analyze_critique,
           "Critique the {target} we are using for {topic}.");
  bank.add(SN::tutoring, TaskCategory::analyze_critique,
           "Assess whether the {target} for {topic} is working.");
  bank.add(SN::tutoring, TaskCategory::concept_explanation,
           "Explain why the {target} matters for {topic}.");
  bank.add(SN::tutoring, TaskCategory::concept_explanation,
           "Help me understand the {target} behind {topic}.");

  return bank;
}

TemplateBank TemplateBank::from_json(const nlohmann::json& doc) {
  TemplateBank bank;
  for (const auto& [key, value] : doc.items()) {
    auto sep = key.find('/');
    if (sep == std::string::npos) {
      throw SchemaError("template bank key must be <scenario>/<task>: " + key);
    }
    auto name = scenario::scenario_from_id(key.substr(0, sep));
    auto task = task_from_id(key.substr(sep + 1));
    for (const auto& tmpl : value) {
      bank.add(name, task, tmpl.get<std::string>());
    }
  }
  return bank;
}

nlohmann::json TemplateBank::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [key, templates] : slots_) {
    doc[key] = templates;
  }
  return doc;
}

const std::vector<std::string>& TemplateBank::templates(scenario::ScenarioName name,
                                                        TaskCategory task) const {
  auto it = slots_.find(scenario::scenario_id(name) + "/" + task_id(task));
  if (it == slots_.end() || it->second.empty()) {
    throw ConfigError("no template registered for task " + task_id(task) + " in scenario " +
                      scenario::scenario_id(name));
  }
  return it->second;
}

void TemplateBank::add(scenario::ScenarioName name, TaskCategory task, std::string tmpl) {
  slots_[scenario::scenario_id(name) + "/" + task_id(task)].push_back(std::move(tmpl));
}

Query instantiate_query(const timeline::Event& event, TaskCategory task,
                        const timeline::Artifact& target, const scenario::Topic& topic,
                        const TemplateBank& templates, std::uint64_t rng_seed) {
  const auto& pool = templates.templates(topic.scenario, task);
  util::Rng rng(util::derive_seed(rng_seed, "query-template"));
  std::string text = pool[rng.below(pool.size())];
  text = util::replace_all(std::move(text), "{target}", util::prettify(target.artifact_type));
  text = util::replace_all(std::move(text), "{topic}", topic.title);

  Query q;
  q.id = topic.id + "-t" + std::to_string(event.index) + "-" + task_id(task) + "-" +
         target.artifact_type + "-s" + std::to_string(rng_seed);
  q.topic_ref = topic.id;
  q.event_index = event.index;
  q.task = task;
  q.target_type = target.artifact_type;
  q.target_version = target.version;
  q.text = std::move(text);
  return q;
}

std::vector<Query> sample_queries(const timeline::Timeline& timeline, int n,
                                  const TemplateBank& templates, std::uint64_t seed) {
  if (timeline.events.empty()) {
    throw ContractError("cannot sample queries from an empty timeline");
  }
  const auto& scen = scenario::builtin(timeline.topic.scenario);
  util::Rng rng(util::derive_seed(seed, "query-sampler"));

  std::vector<Query> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int t = 1 + static_cast<int>(rng.below(timeline.events.size()));
    auto artifacts = timeline.artifacts_at(t);
    auto pairs = feasible_tasks(artifacts, scen);
    auto [task, type] = pairs[rng.below(pairs.size())];

    timeline::Artifact target;
    if (artifacts.has(type)) {
      target = artifacts.get(type);
    } else {
      // Not yet materialized; only plan/explain tasks reach this branch.
      target.artifact_type = type;
      target.version = 0;
    }
    std::uint64_t qseed = rng.next_u64();
    auto q = instantiate_query(timeline.events[static_cast<std::size_t>(t - 1)], task, target,
                               timeline.topic, templates, qseed);
    q.id += "-i" + std::to_string(i);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace memsteer::querygen
