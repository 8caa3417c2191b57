#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsteer/backend.hpp"
#include "memsteer/scenario.hpp"
#include "memsteer/util.hpp"

namespace memsteer::timeline {

using scenario::ArtifactTypeId;
using scenario::EventTypeId;
using scenario::Scenario;
using scenario::Topic;

struct Event {
  int index = 0;  // 1-based position t; 0 on unplaced proposals
  EventTypeId event_type;
  std::string description;
  std::set<ArtifactTypeId> prerequisites;
  std::set<ArtifactTypeId> produces;
  bool terminal = false;  // proposers mark the closing event explicitly
};

struct Artifact {
  ArtifactTypeId artifact_type;
  int version = 0;
  std::string content;
  int created_by = 0;
};

/// Latest version of each artifact type.
class ArtifactSet {
 public:
  bool has(const ArtifactTypeId& type) const;
  const Artifact& get(const ArtifactTypeId& type) const;
  std::set<ArtifactTypeId> keys() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<ArtifactTypeId, Artifact>& entries() const { return entries_; }

  /// Replaces/creates the entry; enforces the +1 version step.
  void put(Artifact artifact);

 private:
  std::map<ArtifactTypeId, Artifact> entries_;
};

struct Rejection {
  int step = 0;     // 1-based step the proposal was meant for
  int attempt = 0;  // 1-based attempt within the step
  EventTypeId event_type;
  std::string reason;
};

struct Timeline {
  Topic topic;
  std::vector<Event> events;
  std::vector<Artifact> artifact_log;  // every version ever produced, in order
  std::vector<Rejection> rejections;
  bool terminal = false;

  std::size_t length() const { return events.size(); }

  /// Reconstructs A_t by replaying artifact production for events 1..t.
  ArtifactSet artifacts_at(int t) const;
  ArtifactSet final_artifacts() const;
};

void to_json(nlohmann::json& j, const Event& e);
void from_json(const nlohmann::json& j, Event& e);
void to_json(nlohmann::json& j, const Artifact& a);
void from_json(const nlohmann::json& j, Artifact& a);
void to_json(nlohmann::json& j, const Rejection& r);
void from_json(const nlohmann::json& j, Rejection& r);
void to_json(nlohmann::json& j, const Timeline& t);
void from_json(const nlohmann::json& j, Timeline& t);

struct PrereqCheck {
  bool ok = false;
  std::set<ArtifactTypeId> missing;
};

/// Subset check of proposal.prerequisites against the current artifact set.
/// Unknown artifact type ids (in prerequisites or produces) raise SchemaError.
PrereqCheck check_prerequisites(const Event& proposal, const ArtifactSet& current,
                                const Scenario& scenario);

/// Appends the event and folds `produced` into the artifact set. `produced`
/// must cover exactly event.produces; versions must continue each type's
/// sequence.
Timeline apply_event(const Timeline& timeline, Event event, std::vector<Artifact> produced);

struct Verdict {
  bool accepted = false;
  std::string reason;
};

class CoherenceValidator {
 public:
  virtual ~CoherenceValidator() = default;
  virtual Verdict validate(const Timeline& timeline, const Event& proposal) = 0;
};

class AcceptAllValidator : public CoherenceValidator {
 public:
  Verdict validate(const Timeline&, const Event&) override { return {true, ""}; }
};

/// Ordering rules of the form "reject <after> before <requires_prior>":
/// a proposal of type `after` is rejected unless an event of type
/// `requires_prior` already appears in the history.
class OrderRuleValidator : public CoherenceValidator {
 public:
  struct Rule {
    EventTypeId after;
    EventTypeId requires_prior;
  };

  explicit OrderRuleValidator(std::vector<Rule> rules) : rules_(std::move(rules)) {}
  Verdict validate(const Timeline& timeline, const Event& proposal) override;

 private:
  std::vector<Rule> rules_;
};

/// LLM-backed coherence check; expects the backend to answer "accept" or
/// "reject: <reason>".
class BackendValidator : public CoherenceValidator {
 public:
  explicit BackendValidator(backend::EndpointClient client) : client_(std::move(client)) {}
  Verdict validate(const Timeline& timeline, const Event& proposal) override;

 private:
  backend::EndpointClient client_;
};

/// Wraps validator dispatch; scripted validators are deterministic by
/// construction. Transport failures propagate to the caller.
Verdict validate_coherence(const Timeline& timeline, const Event& proposal,
                           const std::vector<Artifact>& produced,
                           CoherenceValidator& validator);

class EventProposer {
 public:
  virtual ~EventProposer() = default;
  /// step and attempt are 1-based; attempt > 1 means the previous proposal
  /// for this step was rejected.
  virtual Event propose(const Timeline& timeline, int step, int attempt) = 0;
};

/// Deterministic proposer that walks the scenario's dependency graph,
/// optionally injecting invalid proposals to exercise the retry path.
class ScriptedProposer : public EventProposer {
 public:
  struct Options {
    int target_len = 8;          // mark terminal at this step
    double invalid_rate = 0.0;   // chance of proposing an infeasible event
    std::uint64_t seed = 0;
  };

  ScriptedProposer(const Scenario& scenario, Options options);
  Event propose(const Timeline& timeline, int step, int attempt) override;

  /// The built-in prerequisite/production table for a scenario event type.
  static std::pair<std::set<ArtifactTypeId>, std::set<ArtifactTypeId>> dependency_row(
      scenario::ScenarioName name, const EventTypeId& event_type);

 private:
  Scenario scenario_;
  Options options_;
  util::Rng rng_;
};

struct SynthLimits {
  int max_len = 25;
  int max_retries_per_step = 3;
};

/// Iterative generate-validate loop. Every accepted event passed both the
/// prerequisite check and the coherence validator; rejected proposals are
/// recorded with reasons. Stops at a terminal proposal or max_len.
Timeline synthesize_timeline(const Topic& topic, EventProposer& generator,
                             CoherenceValidator& validator, const SynthLimits& limits);

}  // namespace memsteer::timeline
