#include "memsteer/timeline.hpp"

#include <algorithm>

#include "memsteer/errors.hpp"

namespace memsteer::timeline {

bool ArtifactSet::has(const ArtifactTypeId& type) const { return entries_.contains(type); }

const Artifact& ArtifactSet::get(const ArtifactTypeId& type) const {
  auto it = entries_.find(type);
  if (it == entries_.end()) {
    throw ContractError("artifact type not present: " + type);
  }
  return it->second;
}

std::set<ArtifactTypeId> ArtifactSet::keys() const {
  std::set<ArtifactTypeId> out;
  for (const auto& [k, _] : entries_) {
    out.insert(k);
  }
  return out;
}

void ArtifactSet::put(Artifact artifact) {
  auto it = entries_.find(artifact.artifact_type);
  int expected = it == entries_.end() ? 1 : it->second.version + 1;
  if (artifact.version != expected) {
    throw InvariantError("version discontinuity for " + artifact.artifact_type + ": got v" +
                         std::to_string(artifact.version) + ", expected v" +
                         std::to_string(expected));
  }
  entries_[artifact.artifact_type] = std::move(artifact);
}

ArtifactSet Timeline::artifacts_at(int t) const {
  ArtifactSet out;
  for (const auto& a : artifact_log) {
    if (a.created_by <= t) {
      out.put(a);
    }
  }
  return out;
}

ArtifactSet Timeline::final_artifacts() const {
  return artifacts_at(static_cast<int>(events.size()));
}

void to_json(nlohmann::json& j, const Event& e) {
  j = nlohmann::json{
      {"index", e.index},
      {"event_type", e.event_type},
      {"description", e.description},
      {"prerequisites", e.prerequisites},
      {"produces", e.produces},
      {"terminal", e.terminal},
  };
}

void from_json(const nlohmann::json& j, Event& e) {
  e.index = j.at("index").get<int>();
  e.event_type = j.at("event_type").get<std::string>();
  e.description = j.at("description").get<std::string>();
  e.prerequisites = j.at("prerequisites").get<std::set<std::string>>();
  e.produces = j.at("produces").get<std::set<std::string>>();
  e.terminal = j.at("terminal").get<bool>();
}

void to_json(nlohmann::json& j, const Artifact& a) {
  j = nlohmann::json{
      {"artifact_type", a.artifact_type},
      {"version", a.version},
      {"content", a.content},
      {"created_by", a.created_by},
  };
}

void from_json(const nlohmann::json& j, Artifact& a) {
  a.artifact_type = j.at("artifact_type").get<std::string>();
  a.version = j.at("version").get<int>();
  a.content = j.at("content").get<std::string>();
  a.created_by = j.at("created_by").get<int>();
}

void to_json(nlohmann::json& j, const Rejection& r) {
  j = nlohmann::json{
      {"step", r.step},
      {"attempt", r.attempt},
      {"event_type", r.event_type},
      {"reason", r.reason},
  };
}

void from_json(const nlohmann::json& j, Rejection& r) {
  r.step = j.at("step").get<int>();
  r.attempt = j.at("attempt").get<int>();
  r.event_type = j.at("event_type").get<std::string>();
  r.reason = j.at("reason").get<std::string>();
}

void to_json(nlohmann::json& j, const Timeline& t) {
  j = nlohmann::json{
      {"topic", t.topic},
      {"events", t.events},
      {"artifact_log", t.artifact_log},
      {"rejections", t.rejections},
      {"terminal", t.terminal},
  };
}

void from_json(const nlohmann::json& j, Timeline& t) {
  t.topic = j.at("topic").get<Topic>();
  t.events = j.at("events").get<std::vector<Event>>();
  t.artifact_log = j.at("artifact_log").get<std::vector<Artifact>>();
  t.rejections = j.at("rejections").get<std::vector<Rejection>>();
  t.terminal = j.at("terminal").get<bool>();
}

PrereqCheck check_prerequisites(const Event& proposal, const ArtifactSet& current,
                                const Scenario& scenario) {
  for (const auto& type : proposal.prerequisites) {
    scenario.require_artifact_type(type);
  }
  for (const auto& type : proposal.produces) {
    scenario.require_artifact_type(type);
  }
  PrereqCheck result;
  for (const auto& type : proposal.prerequisites) {
    if (!current.has(type)) {
      result.missing.insert(type);
    }
  }
  result.ok = result.missing.empty();
  return result;
}

Timeline apply_event(const Timeline& timeline, Event event, std::vector<Artifact> produced) {
  std::set<ArtifactTypeId> produced_types;
  for (const auto& a : produced) {
    produced_types.insert(a.artifact_type);
  }
  if (produced_types != event.produces) {
    throw ContractError("produced artifacts do not cover event.produces exactly");
  }
  for (const auto& a : produced) {
    if (a.content.empty()) {
      throw ContractError("artifact content must be non-empty: " + a.artifact_type);
    }
  }

  Timeline next = timeline;
  int t = static_cast<int>(next.events.size()) + 1;
  event.index = t;
  ArtifactSet current = timeline.final_artifacts();
  for (auto& a : produced) {
    a.created_by = t;
    int expected = current.has(a.artifact_type) ? current.get(a.artifact_type).version + 1 : 1;
    if (a.version != expected) {
      throw InvariantError("version discontinuity for " + a.artifact_type + ": got v" +
                           std::to_string(a.version) + ", expected v" +
                           std::to_string(expected));
    }
    next.artifact_log.push_back(a);
  }
  next.events.push_back(std::move(event));
  return next;
}

Verdict OrderRuleValidator::validate(const Timeline& timeline, const Event& proposal) {
  for (const auto& rule : rules_) {
    if (proposal.event_type != rule.after) {
      continue;
    }
    bool prior_seen = std::any_of(
        timeline.events.begin(), timeline.events.end(),
        [&](const Event& e) { return e.event_type == rule.requires_prior; });
    if (!prior_seen) {
      return {false, "rule:" + rule.after + "-before-" + rule.requires_prior};
    }
  }
  return {true, ""};
}

Verdict BackendValidator::validate(const Timeline& timeline, const Event& proposal) {
  std::string history;
  for (const auto& e : timeline.events) {
    history += std::to_string(e.index) + ". " + e.event_type + ": " + e.description + "\n";
  }
  std::string prompt =
      "Project topic: " + timeline.topic.title + "\nHistory so far:\n" + history +
      "Proposed next event: " + proposal.event_type + ": " + proposal.description +
      "\nDoes this event fit coherently as the next step? Answer with exactly "
      "\"accept\" or \"reject: <reason>\".";
  std::string answer = client_.chat(backend::Role::validator, {{"user", prompt}});
  std::string lowered = util::lower(answer);
  if (util::starts_with(lowered, "accept")) {
    return {true, ""};
  }
  std::string reason = answer;
  if (auto pos = answer.find(':'); pos != std::string::npos) {
    reason = answer.substr(pos + 1);
    while (!reason.empty() && reason.front() == ' ') {
      reason.erase(reason.begin());
    }
  }
  return {false, reason.empty() ? "rejected" : reason};
}

Verdict validate_coherence(const Timeline& timeline, const Event& proposal,
                           const std::vector<Artifact>&, CoherenceValidator& validator) {
  return validator.validate(timeline, proposal);
}

ScriptedProposer::ScriptedProposer(const Scenario& scenario, Options options)
    : scenario_(scenario), options_(options), rng_(options.seed) {}

std::pair<std::set<ArtifactTypeId>, std::set<ArtifactTypeId>> ScriptedProposer::dependency_row(
    scenario::ScenarioName name, const EventTypeId& event_type) {
  using Row = std::pair<std::set<ArtifactTypeId>, std::set<ArtifactTypeId>>;
  if (name == scenario::ScenarioName::research) {
    static const std::map<EventTypeId, Row> rows = {
        {"proposal", {{}, {"research_goals", "research_plan"}}},
        {"method_design", {{"research_plan"}, {"method"}}},
        {"pilot_experiments", {{"method"}, {"experiment_results"}}},
        {"main_experiments", {{"method"}, {"experiment_results"}}},
        {"analysis", {{"experiment_results"}, {"research_plan"}}},
        {"writing", {{"experiment_results"}, {"paper_paragraph"}}},
    };
    auto it = rows.find(event_type);
    if (it == rows.end()) {
      throw SchemaError("unknown event type id: " + event_type);
    }
    return it->second;
  }
  static const std::map<EventTypeId, Row> rows = {
      {"objective_clarification", {{}, {"learning_objectives"}}},
      {"plan_milestones", {{"learning_objectives"}, {"study_plan"}}},
      {"lesson", {{"study_plan"}, {"teaching_notes"}}},
      {"practice", {{"teaching_notes"}, {"practice_record"}}},
      {"review", {{"practice_record"}, {"feedback_summary"}}},
      {"materials_revision", {{"feedback_summary"}, {"teaching_notes"}}},
  };
  auto it = rows.find(event_type);
  if (it == rows.end()) {
    throw SchemaError("unknown event type id: " + event_type);
  }
  return it->second;
}

Event ScriptedProposer::propose(const Timeline& timeline, int step, int attempt) {
  ArtifactSet current = timeline.final_artifacts();

  std::vector<EventTypeId> feasible;
  std::vector<EventTypeId> infeasible;
  for (const auto& et : scenario_.event_types) {
    auto [prereqs, _] = dependency_row(scenario_.name, et);
    bool ok = std::all_of(prereqs.begin(), prereqs.end(),
                          [&](const ArtifactTypeId& t) { return current.has(t); });
    (ok ? feasible : infeasible).push_back(et);
  }
  if (feasible.empty()) {
    throw Error("scripted proposer has no feasible event type");
  }

  bool sabotage = attempt == 1 && !infeasible.empty() && rng_.chance(options_.invalid_rate);
  const EventTypeId& chosen = sabotage ? infeasible[rng_.below(infeasible.size())]
                                       : feasible[rng_.below(feasible.size())];

  auto [prereqs, produces] = dependency_row(scenario_.name, chosen);
  Event e;
  e.event_type = chosen;
  e.description = "Session " + std::to_string(step) + ": " + util::prettify(chosen) + " on " +
                  timeline.topic.title + ".";
  e.prerequisites = prereqs;
  e.produces = produces;
  e.terminal = step >= options_.target_len;
  return e;
}

namespace {

std::vector<Artifact> materialize(const Topic& topic, const Event& event,
                                  const ArtifactSet& current) {
  std::vector<Artifact> out;
  for (const auto& type : event.produces) {
    Artifact a;
    a.artifact_type = type;
    a.version = current.has(type) ? current.get(type).version + 1 : 1;
    a.content = topic.title + " — " + util::prettify(type) + " v" + std::to_string(a.version) +
                ", produced by " + util::prettify(event.event_type) + ".";
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

Timeline synthesize_timeline(const Topic& topic, EventProposer& generator,
                             CoherenceValidator& validator, const SynthLimits& limits) {
  if (limits.max_len < 1) {
    throw ContractError("max_len must be >= 1");
  }
  const Scenario& scen = scenario::builtin(topic.scenario);

  Timeline t;
  t.topic = topic;

  for (int step = 1; step <= limits.max_len; ++step) {
    bool accepted = false;
    std::string last_reason = "no proposal";
    for (int attempt = 1; attempt <= limits.max_retries_per_step + 1; ++attempt) {
      Event proposal = generator.propose(t, step, attempt);

      auto check = check_prerequisites(proposal, t.final_artifacts(), scen);
      if (!check.ok) {
        last_reason = "missing prerequisites: " + util::join(
            std::vector<std::string>(check.missing.begin(), check.missing.end()), ", ");
        t.rejections.push_back({step, attempt, proposal.event_type, last_reason});
        continue;
      }

      auto produced = materialize(topic, proposal, t.final_artifacts());
      Verdict verdict;
      try {
        verdict = validate_coherence(t, proposal, produced, validator);
      } catch (const TransportError&) {
        verdict = {false, "validator unavailable"};
      }
      if (!verdict.accepted) {
        last_reason = verdict.reason;
        t.rejections.push_back({step, attempt, proposal.event_type, last_reason});
        continue;
      }

      bool terminal = proposal.terminal;
      t = apply_event(t, std::move(proposal), std::move(produced));
      accepted = true;
      if (terminal) {
        t.terminal = true;
        return t;
      }
      break;
    }
    if (!accepted) {
      throw SynthesisError(step, last_reason);
    }
  }
  return t;
}

}  // namespace memsteer::timeline
