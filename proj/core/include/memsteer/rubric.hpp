#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memsteer::rubric {

struct Level {
  int value = 0;  // 1..5
  std::string name;
  std::string descriptor;
};

struct Axis {
  std::string name;  // Content | Pattern | Style
  std::string definition;
  std::array<Level, 5> levels;
};

/// The memory-dependence judging rubric: one latent axis projected onto
/// Content/Pattern/Style, scored 1..5, aggregated into the named field.
struct Rubric {
  std::string field_name;  // "overall_memory_dependence_score"
  std::array<Level, 5> levels;
  std::array<Axis, 3> axes;
  std::string aggregation_note;
  std::vector<std::string> usage_notes;

  const Level& level(int value) const;
  const Axis& axis(const std::string& name) const;
};

const Rubric& builtin();

nlohmann::json to_json(const Rubric& rubric);
Rubric from_json(const nlohmann::json& doc);

/// Full instruction sheet for LLM judges: scale, axes, aggregation, and the
/// required output format.
std::string render_judge_prompt(const Rubric& rubric);

/// The task-quality rubric (1..5) used for R_task scoring.
std::string task_rubric_prompt();

}  // namespace memsteer::rubric
