#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsteer/backend.hpp"
#include "memsteer/judge.hpp"
#include "memsteer/memory.hpp"
#include "memsteer/metrics.hpp"
#include "memsteer/querygen.hpp"
#include "memsteer/timeline.hpp"

namespace memsteer::datagen {

/// The five preference tags appended in tag expression mode, indexed by
/// preference 1..5.
const std::vector<std::string>& preference_tags();

struct AugmentedQuery {
  querygen::Query base;
  metrics::Preference target_preference;
  std::string text;
  std::optional<int> realigned_to;
};

void to_json(nlohmann::json& j, const AugmentedQuery& q);
void from_json(const nlohmann::json& j, AugmentedQuery& q);

struct TrainingRecord {
  std::string id;
  AugmentedQuery query;
  memory::MemoryBundle memory;
  std::optional<judge::Response> response;        // absent on RL records
  std::optional<metrics::VerdictScores> verdicts; // absent on RL records
  double general_raw = 0.0;
  std::string split;  // "sft" | "rl"
};

void to_json(nlohmann::json& j, const TrainingRecord& r);
void from_json(const nlohmann::json& j, TrainingRecord& r);

class UserSimulator {
 public:
  virtual ~UserSimulator() = default;
  /// Rewrites the query so it implicitly conveys the preference. attempt is
  /// 1-based; 2 marks a retry after a verbatim echo.
  virtual std::string rewrite(const querygen::Query& query, int preference, int attempt) = 0;
};

/// Deterministic simulator: preference-specific framing prepended to the
/// query text.
class ScriptedSimulator : public UserSimulator {
 public:
  std::string rewrite(const querygen::Query& query, int preference, int attempt) override;
};

/// LLM-backed simulator using the rewrite instruction sheet.
class BackendSimulator : public UserSimulator {
 public:
  explicit BackendSimulator(backend::EndpointClient client) : client_(std::move(client)) {}
  std::string rewrite(const querygen::Query& query, int preference, int attempt) override;

 private:
  backend::EndpointClient client_;
};

/// The instruction sheet handed to LLM rewrite simulators.
std::string rewrite_prompt();

/// Expresses p_aug on top of the base query. Tag mode appends the predefined
/// tag, rubric mode prepends the explicit level instruction, natural mode
/// delegates to the simulator (verbatim echoes are retried once, then
/// RewriteError).
AugmentedQuery augment_query(const querygen::Query& query, const metrics::Preference& p_aug,
                             UserSimulator& simulator);

/// Rewrites the original query to match the realized score; the emitted
/// record's alignment property holds by construction.
AugmentedQuery realign_query(const querygen::Query& query, int realized_md,
                             metrics::PreferenceExpression expression,
                             UserSimulator& simulator);

class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;
  virtual std::string id() const = 0;
  virtual judge::Response generate(const AugmentedQuery& query,
                                   const memory::MemoryBundle& memory, int sample_index) = 0;
};

/// Deterministic steerable stand-in policy. It composes responses from
/// memory content words plus filler so that the heuristic judge's overlap
/// buckets land on the conveyed preference level (with a small seeded jitter),
/// and defaults to heavy memory reliance when nothing is conveyed.
class BuiltinPolicy : public PolicyBackend {
 public:
  BuiltinPolicy(std::string id, std::uint64_t seed, bool jitter = true)
      : id_(std::move(id)), seed_(seed), jitter_(jitter) {}

  std::string id() const override { return id_; }
  judge::Response generate(const AugmentedQuery& query, const memory::MemoryBundle& memory,
                           int sample_index) override;

  /// Core text composer: target_level nullopt = anchored (defaults to 4-5).
  std::string generate_text(std::optional<int> target_level,
                            const memory::MemoryBundle& memory,
                            const std::string& target_type, std::uint64_t sample_seed) const;

 private:
  std::string id_;
  std::uint64_t seed_;
  bool jitter_;
};

/// LLM policy speaking the chat protocol with the memory bundle in context.
class BackendPolicy : public PolicyBackend {
 public:
  BackendPolicy(std::string id, backend::EndpointClient client)
      : id_(std::move(id)), client_(std::move(client)) {}
  std::string id() const override { return id_; }
  judge::Response generate(const AugmentedQuery& query, const memory::MemoryBundle& memory,
                           int sample_index) override;

 private:
  std::string id_;
  backend::EndpointClient client_;
};

struct CandidateSet {
  std::vector<judge::Response> responses;
  std::vector<std::string> errors;  // per-backend failure records
};

/// n_per_policy responses per backend; backend failures leave partial
/// results plus an error record.
CandidateSet sample_candidates(const AugmentedQuery& q_aug, const memory::MemoryBundle& memory,
                               const std::vector<PolicyBackend*>& policies, int n_per_policy);

/// Per base query, retains the top-`keep` records by task + normalized
/// general score; ties break toward the lower record id.
std::vector<TrainingRecord> quality_filter(const std::vector<TrainingRecord>& candidates,
                                           int keep);

struct DatagenConfig {
  int n_sft = 70;
  int n_rl = 20;
  int keep = 1;
  int n_per_policy = 2;
  int window = 2;
  std::uint64_t seed = 0;
  metrics::PreferenceExpression expression = metrics::PreferenceExpression::tag;
  judge::ScoreBounds general_bounds;
};

struct DatagenResult {
  std::vector<TrainingRecord> sft;
  std::vector<TrainingRecord> rl;
};

/// Full pipeline over already-synthesized timelines: base-query sampling
/// (SFT and RL pools disjoint), augmentation, candidate sampling, judging,
/// realignment, quality filtering.
DatagenResult run_datagen(const std::vector<timeline::Timeline>& timelines,
                          const DatagenConfig& config, UserSimulator& simulator,
                          judge::JudgeBackend& judge_backend,
                          judge::GeneralScorer& general_scorer,
                          const std::vector<PolicyBackend*>& policies,
                          const querygen::TemplateBank& templates);

}  // namespace memsteer::datagen
