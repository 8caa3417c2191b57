#include "memsteer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "memsteer/errors.hpp"

namespace memsteer::metrics {

std::string expression_id(PreferenceExpression e) {
  switch (e) {
    case PreferenceExpression::natural:
      return "natural";
    case PreferenceExpression::tag:
      return "tag";
    case PreferenceExpression::rubric:
      return "rubric";
  }
  throw ContractError("unknown preference expression");
}

PreferenceExpression expression_from_id(const std::string& id) {
  if (id == "natural") {
    return PreferenceExpression::natural;
  }
  if (id == "tag") {
    return PreferenceExpression::tag;
  }
  if (id == "rubric") {
    return PreferenceExpression::rubric;
  }
  throw SchemaError("unknown preference expression id: " + id);
}

void to_json(nlohmann::json& j, const Preference& p) {
  j = nlohmann::json{{"value", p.value}, {"expression", expression_id(p.expression)}};
}

void from_json(const nlohmann::json& j, Preference& p) {
  p.value = j.at("value").get<int>();
  p.expression = expression_from_id(j.at("expression").get<std::string>());
}

namespace {

void require_score_range(int value, const char* label) {
  if (value < 1 || value > 5) {
    throw ContractError(std::string(label) + " must be in 1..5, got " +
                        std::to_string(value));
  }
}

}  // namespace

int alignment_error(int md_score, const Preference& preference) {
  require_score_range(md_score, "md_score");
  require_score_range(preference.value, "preference");
  return std::abs(md_score - preference.value);
}

RewardBreakdown total_reward(const VerdictScores& verdicts, const Preference& preference) {
  require_score_range(verdicts.task, "task score");
  if (verdicts.general < 0.0 || verdicts.general > 5.0) {
    throw ContractError("general score must be in [0,5]");
  }
  RewardBreakdown out;
  out.r_align = -alignment_error(verdicts.md, preference);
  out.r_task = verdicts.task;
  out.r_general = verdicts.general;
  out.total = out.r_align + out.r_task + out.r_general;
  return out;
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw ContractError("GRPO group needs K >= 2 rewards");
  }
  util::KahanSum sum;
  for (double r : rewards) {
    sum.add(r);
  }
  double mean = sum.mean();
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) {
    out.push_back(r - mean);
  }
  return out;
}

double grpo_clipped_objective(const GrpoGroup& group) {
  if (group.rewards.size() != group.ratios.size()) {
    throw ContractError("GRPO rewards and ratios must have equal length");
  }
  if (group.epsilon <= 0.0 || group.epsilon >= 1.0) {
    throw ContractError("GRPO epsilon must be in (0,1)");
  }
  for (double rho : group.ratios) {
    if (rho <= 0.0) {
      throw ContractError("GRPO ratios must be positive");
    }
  }
  auto advantages = grpo_advantages(group.rewards);

  util::KahanSum sum;
  for (std::size_t k = 0; k < advantages.size(); ++k) {
    double rho = group.ratios[k];
    double adv = advantages[k];
    double clipped = std::clamp(rho, 1.0 - group.epsilon, 1.0 + group.epsilon);
    sum.add(std::min(rho * adv, clipped * adv));
  }
  return sum.value() / static_cast<double>(advantages.size());
}

ConfusionMatrix ConfusionMatrix::from_pairs(const std::vector<std::pair<int, int>>& pairs) {
  ConfusionMatrix m;
  for (const auto& [target, realized] : pairs) {
    require_score_range(target, "target");
    require_score_range(realized, "realized");
    ++m.counts_[static_cast<std::size_t>(realized - 1)][static_cast<std::size_t>(target - 1)];
  }
  return m;
}

double ConfusionMatrix::at(int realized, int target) const {
  std::size_t total = column_total(target);
  if (total == 0) {
    return 0.0;
  }
  return static_cast<double>(count(realized, target)) / static_cast<double>(total);
}

std::size_t ConfusionMatrix::count(int realized, int target) const {
  require_score_range(realized, "realized");
  require_score_range(target, "target");
  return counts_[static_cast<std::size_t>(realized - 1)][static_cast<std::size_t>(target - 1)];
}

std::size_t ConfusionMatrix::column_total(int target) const {
  require_score_range(target, "target");
  std::size_t total = 0;
  for (int realized = 1; realized <= 5; ++realized) {
    total += counts_[static_cast<std::size_t>(realized - 1)]
                    [static_cast<std::size_t>(target - 1)];
  }
  return total;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int realized = 1; realized <= 5; ++realized) {
    nlohmann::json row = nlohmann::json::array();
    for (int target = 1; target <= 5; ++target) {
      row.push_back(at(realized, target));
    }
    rows.push_back(row);
  }
  nlohmann::json counts = nlohmann::json::array();
  for (int realized = 1; realized <= 5; ++realized) {
    nlohmann::json row = nlohmann::json::array();
    for (int target = 1; target <= 5; ++target) {
      row.push_back(count(realized, target));
    }
    counts.push_back(row);
  }
  return nlohmann::json{
      {"layout", "rows=realized, columns=target, column-normalized"},
      {"normalized", rows},
      {"counts", counts},
  };
}

std::string ConfusionMatrix::to_csv() const {
  std::string out = "realized\\target,1,2,3,4,5\n";
  for (int realized = 1; realized <= 5; ++realized) {
    out += std::to_string(realized);
    for (int target = 1; target <= 5; ++target) {
      out += "," + std::to_string(at(realized, target));
    }
    out += "\n";
  }
  return out;
}

AgreementStats pairwise_agreement(const std::vector<AgreementItem>& items) {
  AgreementStats stats;
  std::size_t concordant = 0;
  std::size_t discordant = 0;

  for (const auto& item : items) {
    require_score_range(item.score_a, "score_a");
    require_score_range(item.score_b, "score_b");
    if (item.score_a == item.score_b) {
      throw ContractError("annotation pairs must have differing scores");
    }
    if (item.human_choice != 'a' && item.human_choice != 'b') {
      throw ContractError("human_choice must be 'a' or 'b'");
    }
    char metric_choice = item.score_a > item.score_b ? 'a' : 'b';
    bool agree = metric_choice == item.human_choice;
    (agree ? concordant : discordant) += 1;

    int gap = std::abs(item.score_a - item.score_b);
    auto& bucket = stats.by_gap[gap];
    ++bucket.count;
    if (agree) {
      ++bucket.agreements;
    }
  }

  stats.total = items.size();
  stats.agreements = concordant;
  if (stats.total > 0) {
    stats.agreement_rate =
        static_cast<double>(concordant) / static_cast<double>(stats.total);
    stats.rank_correlation = (static_cast<double>(concordant) -
                              static_cast<double>(discordant)) /
                             static_cast<double>(concordant + discordant);
  }
  for (auto& [gap, bucket] : stats.by_gap) {
    bucket.agreement_rate =
        static_cast<double>(bucket.agreements) / static_cast<double>(bucket.count);
  }
  return stats;
}

WinRate win_rate(const std::vector<WinVerdict>& verdicts) {
  if (verdicts.empty()) {
    throw ContractError("win_rate over an empty verdict list");
  }
  std::int64_t wins = 0;
  std::int64_t losses = 0;
  std::int64_t ties = 0;
  for (auto v : verdicts) {
    switch (v) {
      case WinVerdict::win:
        ++wins;
        break;
      case WinVerdict::lose:
        ++losses;
        break;
      case WinVerdict::tie:
        ++ties;
        break;
    }
  }
  auto n = static_cast<std::int64_t>(verdicts.size());
  return WinRate{util::Ratio(wins, n), util::Ratio(losses, n), util::Ratio(ties, n)};
}

AnnotationSample sample_annotation_pairs(
    const std::map<std::string, std::vector<ScoredResponse>>& groups, std::uint64_t seed) {
  AnnotationSample out;
  for (const auto& [query_id, responses] : groups) {
    std::vector<std::pair<std::size_t, std::size_t>> eligible;
    for (std::size_t i = 0; i < responses.size(); ++i) {
      for (std::size_t j = i + 1; j < responses.size(); ++j) {
        if (responses[i].md_score != responses[j].md_score) {
          eligible.emplace_back(i, j);
        }
      }
    }
    if (eligible.empty()) {
      out.skipped_queries.push_back(query_id);
      continue;
    }
    util::Rng rng(util::derive_seed(seed, "annotation/" + query_id));
    auto [i, j] = eligible[rng.below(eligible.size())];
    AnnotationPair pair;
    pair.query_id = query_id;
    pair.a = responses[i];
    pair.b = responses[j];
    if (rng.chance(0.5)) {
      std::swap(pair.a, pair.b);
    }
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

EvalReport build_eval_report(const std::vector<EvalEntry>& entries) {
  EvalReport report;
  std::map<std::string, std::map<std::string, util::KahanSum>> sums;
  util::KahanSum global;
  std::vector<std::pair<int, int>> confusion_pairs;

  for (const auto& e : entries) {
    int delta = alignment_error(e.md_score, Preference{e.preference});
    sums[e.scenario][e.task].add(delta);
    global.add(delta);
    confusion_pairs.emplace_back(e.preference, e.md_score);

    auto& dist = report.mode_distributions[e.mode];
    ++dist[static_cast<std::size_t>(e.md_score - 1)];
  }

  for (const auto& [scenario, tasks] : sums) {
    for (const auto& [task, sum] : tasks) {
      report.cells[scenario][task] = ReportCell{sum.count(), sum.mean()};
    }
  }
  report.total = global.count();
  report.global_mean_delta = global.count() > 0 ? global.mean() : 0.0;
  report.confusion = ConfusionMatrix::from_pairs(confusion_pairs);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [scenario, tasks] : report.cells) {
    for (const auto& [task, cell] : tasks) {
      cells[scenario][task] = {{"count", cell.count}, {"mean_delta_align", cell.mean_delta}};
    }
  }
  nlohmann::json dists = nlohmann::json::object();
  for (const auto& [mode, dist] : report.mode_distributions) {
    dists[mode] = dist;
  }
  return nlohmann::json{
      {"cells", cells},
      {"global", {{"count", report.total}, {"mean_delta_align", report.global_mean_delta}}},
      {"mode_distributions", dists},
      {"confusion", report.confusion.to_json()},
      {"metadata", report.metadata},
  };
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "scenario,task,count,mean_delta_align\n";
  for (const auto& [scenario, tasks] : report.cells) {
    for (const auto& [task, cell] : tasks) {
      out += scenario + "," + task + "," + std::to_string(cell.count) + "," +
             std::to_string(cell.mean_delta) + "\n";
    }
  }
  out += "all,all," + std::to_string(report.total) + "," +
         std::to_string(report.global_mean_delta) + "\n";
  return out;
}

std::string report_to_text(const EvalReport& report) {
  std::set<std::string> tasks;
  for (const auto& [_, row] : report.cells) {
    for (const auto& [task, __] : row) {
      tasks.insert(task);
    }
  }

  auto cell_text = [&](const std::string& scenario, const std::string& task) -> std::string {
    auto srow = report.cells.find(scenario);
    if (srow == report.cells.end()) {
      return "-";
    }
    auto cell = srow->second.find(task);
    if (cell == srow->second.end()) {
      return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", cell->second.mean_delta);
    return buf;
  };

  std::size_t width = 12;
  for (const auto& t : tasks) {
    width = std::max(width, t.size() + 2);
  }

  auto pad = [&](const std::string& s) {
    std::string out = s;
    while (out.size() < width) {
      out.push_back(' ');
    }
    return out;
  };

  std::string out = "Mean alignment error (delta_align) by scenario and task\n\n";
  out += pad("scenario");
  for (const auto& t : tasks) {
    out += pad(t);
  }
  out += pad("all") + "\n";
  for (const auto& [scenario, row] : report.cells) {
    out += pad(scenario);
    util::KahanSum srow_sum;
    std::size_t srow_count = 0;
    for (const auto& t : tasks) {
      out += pad(cell_text(scenario, t));
      auto cell = row.find(t);
      if (cell != row.end()) {
        srow_sum.add(cell->second.mean_delta * static_cast<double>(cell->second.count));
        srow_count += cell->second.count;
      }
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f",
                  srow_count > 0 ? srow_sum.value() / static_cast<double>(srow_count) : 0.0);
    out += pad(buf);
    out += "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "\nglobal mean over %zu records: %.4f\n", report.total,
                report.global_mean_delta);
  out += buf;
  return out;
}

}  // namespace memsteer::metrics
