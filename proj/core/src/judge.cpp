#include "memsteer/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "memsteer/errors.hpp"
#include "memsteer/util.hpp"

namespace memsteer::judge {

std::string mode_id(PromptMode mode) {
  switch (mode) {
    case PromptMode::none:
      return "none";
    case PromptMode::low:
      return "low";
    case PromptMode::medium:
      return "medium";
    case PromptMode::high:
      return "high";
  }
  throw ContractError("unknown prompt mode");
}

PromptMode mode_from_id(const std::string& id) {
  if (id == "none") {
    return PromptMode::none;
  }
  if (id == "low") {
    return PromptMode::low;
  }
  if (id == "medium") {
    return PromptMode::medium;
  }
  if (id == "high") {
    return PromptMode::high;
  }
  throw SchemaError("unknown prompt mode id: " + id);
}

const std::vector<PromptMode>& all_modes() {
  static const std::vector<PromptMode> modes = {PromptMode::none, PromptMode::low,
                                                PromptMode::medium, PromptMode::high};
  return modes;
}

std::optional<int> mode_target_level(PromptMode mode) {
  switch (mode) {
    case PromptMode::none:
      return std::nullopt;
    case PromptMode::low:
      return 1;
    case PromptMode::medium:
      return 3;
    case PromptMode::high:
      return 5;
  }
  throw ContractError("unknown prompt mode");
}

void to_json(nlohmann::json& j, const Response& r) {
  j = nlohmann::json{
      {"text", r.text},
      {"producer", r.producer},
      {"prompt_mode", r.prompt_mode},
      {"query_ref", r.query_ref},
  };
}

void from_json(const nlohmann::json& j, Response& r) {
  r.text = j.at("text").get<std::string>();
  r.producer = j.at("producer").get<std::string>();
  r.prompt_mode = j.at("prompt_mode").get<std::string>();
  r.query_ref = j.at("query_ref").get<std::string>();
}

void to_json(nlohmann::json& j, const JudgeVerdict& v) {
  j = nlohmann::json{
      {"md_score", v.md_score},
      {"axis_scores", v.axis_scores},
      {"rationale", v.rationale},
      {"raw", v.raw},
  };
}

void from_json(const nlohmann::json& j, JudgeVerdict& v) {
  v.md_score = j.at("md_score").get<int>();
  v.axis_scores = j.at("axis_scores").get<std::map<std::string, int>>();
  v.rationale = j.at("rationale").get<std::string>();
  v.raw = j.at("raw").get<std::string>();
}

int HeuristicJudge::bucket_overlap(double jaccard) {
  if (jaccard < 0.05) {
    return 1;
  }
  if (jaccard < 0.15) {
    return 2;
  }
  if (jaccard < 0.30) {
    return 3;
  }
  if (jaccard < 0.50) {
    return 4;
  }
  return 5;
}

namespace {

std::string memory_text(const memory::MemoryBundle& memory) {
  std::string out = memory.profile;
  for (const auto& item : memory.all_items()) {
    out += "\n" + item.summary;
  }
  return out;
}

}  // namespace

std::string HeuristicJudge::judge_memory_dependence(const Response& response,
                                                    const querygen::Query&,
                                                    const memory::MemoryBundle& memory,
                                                    int) {
  double overlap = util::jaccard(response.text, memory_text(memory));
  int md = bucket_overlap(overlap);
  nlohmann::json payload{
      {"content", md},
      {"pattern", md},
      {"style", md},
      {"overall_memory_dependence_score", md},
      {"rationale", "content-word overlap " + std::to_string(overlap) + " against " +
                        std::to_string(memory.all_items().size()) + " memory items"},
  };
  return payload.dump();
}

std::string HeuristicJudge::judge_task(const Response& response, const querygen::Query& query,
                                       int) {
  auto words = util::content_words(response.text);
  int score;
  if (words.size() < 5) {
    score = 1;
  } else {
    score = 3;
    if (util::contains(util::lower(response.text),
                       util::lower(util::prettify(query.target_type)))) {
      ++score;
    }
    if (words.size() >= 40) {
      ++score;
    }
  }
  nlohmann::json payload{
      {"task_score", score},
      {"rationale", "word count " + std::to_string(words.size())},
  };
  return payload.dump();
}

namespace {

std::string render_bundle(const memory::MemoryBundle& memory) {
  std::string out = "User profile: " + memory.profile + "\nInter-session memory:\n";
  for (const auto& item : memory.inter_session) {
    out += "- [" + item.id() + "] " + item.summary + "\n";
  }
  out += "Intra-session memory:\n";
  for (const auto& item : memory.intra_session) {
    out += "- [" + item.id() + "] " + item.summary + "\n";
  }
  return out;
}

}  // namespace

std::string BackendJudge::judge_memory_dependence(const Response& response,
                                                  const querygen::Query& query,
                                                  const memory::MemoryBundle& memory,
                                                  int attempt) {
  std::string user = "Query: " + query.text + "\n\n" + render_bundle(memory) +
                     "\nAnswer to judge:\n" + response.text;
  if (attempt > 1) {
    user += "\n\n(Attempt " + std::to_string(attempt) +
            ": your previous output could not be parsed. Reply with valid JSON only.)";
  }
  return client_.chat(backend::Role::judge,
                      {{"system", rubric::render_judge_prompt(rubric::builtin())},
                       {"user", user}});
}

std::string BackendJudge::judge_task(const Response& response, const querygen::Query& query,
                                     int attempt) {
  std::string user = "Task: " + query.text + "\n\nAnswer to judge:\n" + response.text;
  if (attempt > 1) {
    user += "\n\n(Attempt " + std::to_string(attempt) +
            ": your previous output could not be parsed. Reply with valid JSON only.)";
  }
  return client_.chat(backend::Role::judge,
                      {{"system", rubric::task_rubric_prompt()}, {"user", user}});
}

namespace {

std::optional<int> lenient_scan(const std::string& payload, const std::string& field) {
  auto pos = payload.find(field);
  if (pos == std::string::npos) {
    return std::nullopt;
  }
  for (std::size_t i = pos + field.size(); i < payload.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(payload[i]);
    if (!std::isdigit(c)) {
      continue;
    }
    // Standalone single digit: neighbors must not be digits.
    bool left_digit = std::isdigit(static_cast<unsigned char>(payload[i - 1]));
    bool right_digit =
        i + 1 < payload.size() && std::isdigit(static_cast<unsigned char>(payload[i + 1]));
    if (left_digit || right_digit) {
      continue;
    }
    int value = payload[i] - '0';
    if (value >= 1 && value <= 5) {
      return value;
    }
  }
  return std::nullopt;
}

std::optional<int> json_int_field(const nlohmann::json& doc, const std::string& field) {
  if (!doc.is_object() || !doc.contains(field)) {
    return std::nullopt;
  }
  const auto& v = doc.at(field);
  if (v.is_number_integer()) {
    return v.get<int>();
  }
  if (v.is_string()) {
    try {
      return std::stoi(v.get<std::string>());
    } catch (...) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<int> parse_score_field(const std::string& payload, const std::string& field) {
  try {
    auto doc = nlohmann::json::parse(payload);
    if (auto v = json_int_field(doc, field)) {
      return v;
    }
  } catch (const nlohmann::json::parse_error&) {
    // fall through to the lenient scan
  }
  return lenient_scan(payload, field);
}

std::optional<JudgeVerdict> parse_verdict(const std::string& payload) {
  const std::string field = rubric::builtin().field_name;
  auto md = parse_score_field(payload, field);
  if (!md || *md < 1 || *md > 5) {
    return std::nullopt;
  }

  JudgeVerdict verdict;
  verdict.md_score = *md;
  verdict.raw = payload;

  try {
    auto doc = nlohmann::json::parse(payload);
    for (const char* axis : {"content", "pattern", "style"}) {
      if (auto v = json_int_field(doc, axis)) {
        if (*v < 1 || *v > 5) {
          return std::nullopt;
        }
        verdict.axis_scores[axis] = *v;
      }
    }
    if (doc.is_object() && doc.contains("rationale") && doc["rationale"].is_string()) {
      verdict.rationale = doc["rationale"].get<std::string>();
    }
  } catch (const nlohmann::json::parse_error&) {
    // lenient path carries no axis scores
  }

  if (verdict.axis_scores.size() == 3) {
    double weighted = 0.4 * verdict.axis_scores["content"] +
                      0.4 * verdict.axis_scores["pattern"] +
                      0.2 * verdict.axis_scores["style"];
    if (std::abs(verdict.md_score - std::lround(weighted)) > 1) {
      return std::nullopt;
    }
  }
  return verdict;
}

JudgeVerdict score_memory_dependence(const Response& response, const querygen::Query& query,
                                     const memory::MemoryBundle& memory,
                                     JudgeBackend& backend) {
  std::string last_payload;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    last_payload = backend.judge_memory_dependence(response, query, memory, attempt);
    if (auto verdict = parse_verdict(last_payload)) {
      return *verdict;
    }
  }
  throw ScoringError("unparseable memory-dependence verdict; raw payload: " + last_payload);
}

int score_task(const Response& response, const querygen::Query& query, JudgeBackend& backend) {
  std::string last_payload;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    last_payload = backend.judge_task(response, query, attempt);
    auto score = parse_score_field(last_payload, "task_score");
    if (score && *score >= 1 && *score <= 5) {
      return *score;
    }
  }
  throw ScoringError("unparseable task verdict; raw payload: " + last_payload);
}

double HashGeneralScorer::score(const std::string& text) {
  return static_cast<double>(util::fnv1a64(text) % 2000) / 100.0;
}

double BackendGeneralScorer::score(const std::string& text) { return client_.score(text); }

double normalize_general(double raw, const ScoreBounds& bounds) {
  if (bounds.hi <= bounds.lo) {
    throw ConfigError("general-score bounds must satisfy lo < hi");
  }
  return std::clamp(5.0 * (raw - bounds.lo) / (bounds.hi - bounds.lo), 0.0, 5.0);
}

GeneralScore score_general(const Response& response, GeneralScorer& scorer,
                           const std::optional<ScoreBounds>& bounds, bool normalize) {
  GeneralScore out;
  out.raw = scorer.score(response.text);
  if (normalize) {
    if (!bounds) {
      throw ConfigError("general-score normalization requested without bounds");
    }
    out.normalized = normalize_general(out.raw, *bounds);
  }
  return out;
}

void to_json(nlohmann::json& j, const VerdictRecord& v) {
  j = nlohmann::json{
      {"query_ref", v.query_ref},
      {"producer", v.producer},
      {"prompt_mode", v.prompt_mode},
      {"scenario", v.scenario},
      {"task", v.task},
      {"preference", v.preference},
      {"md_score", v.md_score},
      {"axis_scores", v.axis_scores},
      {"task_score", v.task_score},
      {"general_raw", v.general_raw},
      {"general_norm", v.general_norm},
      {"delta_align", v.delta_align},
      {"rationale", v.rationale},
  };
}

void from_json(const nlohmann::json& j, VerdictRecord& v) {
  v.query_ref = j.at("query_ref").get<std::string>();
  v.producer = j.at("producer").get<std::string>();
  v.prompt_mode = j.at("prompt_mode").get<std::string>();
  v.scenario = j.at("scenario").get<std::string>();
  v.task = j.at("task").get<std::string>();
  v.preference = j.at("preference").get<int>();
  v.md_score = j.at("md_score").get<int>();
  v.axis_scores = j.at("axis_scores").get<std::map<std::string, int>>();
  v.task_score = j.at("task_score").get<int>();
  v.general_raw = j.at("general_raw").get<double>();
  v.general_norm = j.at("general_norm").get<double>();
  v.delta_align = j.at("delta_align").get<int>();
  v.rationale = j.at("rationale").get<std::string>();
}

std::string dependence_prompt(PromptMode mode) {
  auto target = mode_target_level(mode);
  if (!target) {
    return "";
  }
  const auto& level = rubric::builtin().level(*target);
  std::string strength = mode == PromptMode::low      ? "minimal"
                         : mode == PromptMode::medium ? "moderate"
                                                      : "maximal";
  return "Use " + strength + " reliance on the provided memory. Target memory-dependence "
         "level " + std::to_string(level.value) + " — " + level.name + ": " +
         level.descriptor;
}

}  // namespace memsteer::judge
