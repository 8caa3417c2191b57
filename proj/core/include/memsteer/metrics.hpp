#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsteer/util.hpp"

namespace memsteer::metrics {

enum class PreferenceExpression {
  natural,  // implicitly conveyed by a rewritten query
  tag,      // appended 5-level tag
  rubric,   // explicit rubric-level instruction
};

std::string expression_id(PreferenceExpression e);
PreferenceExpression expression_from_id(const std::string& id);

struct Preference {
  int value = 0;  // 1..5
  PreferenceExpression expression = PreferenceExpression::tag;
};

void to_json(nlohmann::json& j, const Preference& p);
void from_json(const nlohmann::json& j, Preference& p);

/// |md_score - preference|, both in 1..5.
int alignment_error(int md_score, const Preference& preference);

struct RewardBreakdown {
  double r_align = 0.0;  // -alignment error, <= 0
  int r_task = 0;        // 1..5
  double r_general = 0.0;  // [0,5]
  double total = 0.0;
};

struct VerdictScores {
  int md = 0;
  int task = 0;
  double general = 0.0;  // normalized [0,5]
};

RewardBreakdown total_reward(const VerdictScores& verdicts, const Preference& preference);

/// reward - group mean, per member. K >= 2.
std::vector<double> grpo_advantages(const std::vector<double>& rewards);

struct GrpoGroup {
  std::vector<double> rewards;
  std::vector<double> ratios;
  double epsilon = 0.2;
};

/// (1/K) sum of min(ratio*adv, clip(ratio, 1-eps, 1+eps)*adv).
double grpo_clipped_objective(const GrpoGroup& group);

/// Column-normalized 5x5 matrix: entry(realized, target) =
/// count(realized, target) / count(target). Empty columns stay all-zero.
class ConfusionMatrix {
 public:
  /// Pairs are (target preference, realized score), both 1..5.
  static ConfusionMatrix from_pairs(const std::vector<std::pair<int, int>>& pairs);

  double at(int realized, int target) const;  // 1-based
  std::size_t count(int realized, int target) const;
  std::size_t column_total(int target) const;

  nlohmann::json to_json() const;
  std::string to_csv() const;

 private:
  std::array<std::array<std::size_t, 5>, 5> counts_{};  // [realized-1][target-1]
};

struct AgreementItem {
  int score_a = 0;      // metric score of response A, 1..5
  int score_b = 0;      // metric score of response B, != score_a
  char human_choice = 'a';  // which response the human ranked higher
};

struct GapBucket {
  std::size_t count = 0;
  std::size_t agreements = 0;
  double agreement_rate = 0.0;
};

struct AgreementStats {
  std::size_t total = 0;
  std::size_t agreements = 0;
  double agreement_rate = 0.0;
  double rank_correlation = 0.0;  // (concordant - discordant) / all pairs
  std::map<int, GapBucket> by_gap;  // keyed by |score_a - score_b| in 1..4
};

AgreementStats pairwise_agreement(const std::vector<AgreementItem>& items);

enum class WinVerdict {
  win,
  lose,
  tie,
};

struct WinRate {
  util::Ratio win;
  util::Ratio lose;
  util::Ratio tie;
};

/// Exact fractions; win + lose + tie always reduces to 1/1.
WinRate win_rate(const std::vector<WinVerdict>& verdicts);

struct ScoredResponse {
  std::string response_id;
  int md_score = 0;
};

struct AnnotationPair {
  std::string query_id;
  ScoredResponse a;
  ScoredResponse b;
};

struct AnnotationSample {
  std::vector<AnnotationPair> pairs;
  std::vector<std::string> skipped_queries;  // no two distinct scores available
};

/// One differing-score pair per eligible query; pair choice and member order
/// are seeded. Groups iterate in sorted query-id order.
AnnotationSample sample_annotation_pairs(
    const std::map<std::string, std::vector<ScoredResponse>>& groups, std::uint64_t seed);

struct EvalEntry {
  std::string scenario;  // "research" | "tutoring"
  std::string task;      // task category id
  int md_score = 0;
  int preference = 0;
  std::string mode;      // prompt mode or expression label
};

struct ReportCell {
  std::size_t count = 0;
  double mean_delta = 0.0;
};

struct EvalReport {
  std::map<std::string, std::map<std::string, ReportCell>> cells;  // scenario -> task -> cell
  double global_mean_delta = 0.0;
  std::size_t total = 0;
  std::map<std::string, std::array<std::size_t, 5>> mode_distributions;
  ConfusionMatrix confusion;
  std::map<std::string, std::string> metadata;
};

EvalReport build_eval_report(const std::vector<EvalEntry>& entries);

nlohmann::json report_to_json(const EvalReport& report);
/// Flat CSV: scenario,task,count,mean_delta_align rows plus a global row.
std::string report_to_csv(const EvalReport& report);
/// Plain-text grid: scenarios x task categories, one mean per cell.
std::string report_to_text(const EvalReport& report);

}  // namespace memsteer::metrics
