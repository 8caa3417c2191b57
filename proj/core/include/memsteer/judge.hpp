#pragma once

#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "memsteer/backend.hpp"
#include "memsteer/memory.hpp"
#include "memsteer/querygen.hpp"
#include "memsteer/rubric.hpp"

namespace memsteer::judge {

enum class PromptMode {
  none,
  low,
  medium,
  high,
};

std::string mode_id(PromptMode mode);
PromptMode mode_from_id(const std::string& id);
const std::vector<PromptMode>& all_modes();

/// The rubric level a steering mode targets; none targets nothing.
std::optional<int> mode_target_level(PromptMode mode);

struct Response {
  std::string text;
  std::string producer;
  std::string prompt_mode;  // mode id or a preference-indicative tag
  std::string query_ref;
};

void to_json(nlohmann::json& j, const Response& r);
void from_json(const nlohmann::json& j, Response& r);

struct JudgeVerdict {
  int md_score = 0;
  std::map<std::string, int> axis_scores;  // empty when the backend gave none
  std::string rationale;
  std::string raw;
};

void to_json(nlohmann::json& j, const JudgeVerdict& v);
void from_json(const nlohmann::json& j, JudgeVerdict& v);

/// Raw-payload producers for the two rubric judgments. `attempt` is 1-based;
/// retried calls pass attempt=2 so cached bad payloads are not replayed.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string judge_memory_dependence(const Response& response,
                                              const querygen::Query& query,
                                              const memory::MemoryBundle& memory,
                                              int attempt) = 0;
  virtual std::string judge_task(const Response& response, const querygen::Query& query,
                                 int attempt) = 0;
};

/// Deterministic stand-in judge: buckets content-word Jaccard overlap between
/// the response and the concatenated memory summaries at {0.05, 0.15, 0.30,
/// 0.50} into scores 1..5.
class HeuristicJudge : public JudgeBackend {
 public:
  std::string judge_memory_dependence(const Response& response, const querygen::Query& query,
                                      const memory::MemoryBundle& memory,
                                      int attempt) override;
  std::string judge_task(const Response& response, const querygen::Query& query,
                         int attempt) override;

  static int bucket_overlap(double jaccard);
};

/// LLM judge speaking the chat protocol with the rubric prompt at
/// temperature 0.
class BackendJudge : public JudgeBackend {
 public:
  explicit BackendJudge(backend::EndpointClient client) : client_(std::move(client)) {}
  std::string judge_memory_dependence(const Response& response, const querygen::Query& query,
                                      const memory::MemoryBundle& memory,
                                      int attempt) override;
  std::string judge_task(const Response& response, const querygen::Query& query,
                         int attempt) override;

 private:
  backend::EndpointClient client_;
};

/// Strict-then-lenient score extraction: JSON field lookup first, then the
/// first standalone integer 1-5 after the field name in free text.
std::optional<int> parse_score_field(const std::string& payload, const std::string& field);

/// Parses a full verdict payload; nullopt when no usable score is present or
/// the axis consistency bound fails.
std::optional<JudgeVerdict> parse_verdict(const std::string& payload);

/// Scores a response against the memory-dependence rubric. Unparseable or
/// out-of-range output is retried once, then surfaced as ScoringError with
/// the raw payload attached.
JudgeVerdict score_memory_dependence(const Response& response, const querygen::Query& query,
                                     const memory::MemoryBundle& memory,
                                     JudgeBackend& backend);

/// Scores task quality 1..5 with the same retry discipline.
int score_task(const Response& response, const querygen::Query& query, JudgeBackend& backend);

struct ScoreBounds {
  double lo = 0.0;
  double hi = 20.0;
};

struct GeneralScore {
  double raw = 0.0;
  std::optional<double> normalized;
};

class GeneralScorer {
 public:
  virtual ~GeneralScorer() = default;
  virtual double score(const std::string& text) = 0;
};

/// Deterministic stand-in reward model: stable hash of the text mapped into
/// [0, 20).
class HashGeneralScorer : public GeneralScorer {
 public:
  double score(const std::string& text) override;
};

/// Remote reward model via the scalar-score endpoint.
class BackendGeneralScorer : public GeneralScorer {
 public:
  explicit BackendGeneralScorer(backend::EndpointClient client) : client_(std::move(client)) {}
  double score(const std::string& text) override;

 private:
  backend::EndpointClient client_;
};

/// Records the raw scalar and, when requested, a min-max normalization into
/// [0,5]. Requesting normalization without bounds is a configuration error.
GeneralScore score_general(const Response& response, GeneralScorer& scorer,
                           const std::optional<ScoreBounds>& bounds, bool normalize = true);

double normalize_general(double raw, const ScoreBounds& bounds);

/// The instruction prepended to steer memory dependence; empty for none,
/// otherwise embeds the verbatim rubric descriptor for level 1/3/5.
std::string dependence_prompt(PromptMode mode);

/// One row of the judged-verdicts stage file.
struct VerdictRecord {
  std::string query_ref;
  std::string producer;
  std::string prompt_mode;
  std::string scenario;
  std::string task;
  int preference = 0;
  int md_score = 0;
  std::map<std::string, int> axis_scores;
  int task_score = 0;
  double general_raw = 0.0;
  double general_norm = 0.0;
  int delta_align = 0;
  std::string rationale;
};

void to_json(nlohmann::json& j, const VerdictRecord& v);
void from_json(const nlohmann::json& j, VerdictRecord& v);

}  // namespace memsteer::judge
