#include "memsteer/rubric.hpp"

#include "memsteer/errors.hpp"

namespace memsteer::rubric {

const Level& Rubric::level(int value) const {
  if (value < 1 || value > 5) {
    throw ContractError("rubric level must be in 1..5");
  }
  return levels[static_cast<std::size_t>(value - 1)];
}

const Axis& Rubric::axis(const std::string& name) const {
  for (const auto& a : axes) {
    if (a.name == name) {
      return a;
    }
  }
  throw ContractError("unknown rubric axis: " + name);
}

const Rubric& builtin() {
  static const Rubric rubric = [] {
    Rubric r;
    r.field_name = "overall_memory_dependence_score";

    r.levels = {{
        {1, "Externalized / Generic Reconstruction",
         "The answer is reconstructed from generic domain principles; internal history "
         "serves only as loose topic cues."},
        {2, "Lightly Contextualized / Ornamental Dependence",
         "History is referenced superficially and does not substantively drive content "
         "or reasoning."},
        {3, "History-Aware / Integrated Dependence",
         "History meaningfully shapes content selection and prioritization; generic "
         "knowledge is filtered through the specific trajectory."},
        {4, "History-Driven / Structural Dependence",
         "Internal artifacts define the backbone; past results/plans structurally "
         "constrain what is said."},
        {5, "Continuation Mode / Deep Entrenchment",
         "The answer is a direct continuation of internal logs; understanding it "
         "requires access to specific history."},
    }};

    Axis content;
    content.name = "Content";
    content.definition =
        "Whether the substance (facts/examples/constraints/recommendations) is grounded "
        "in internal project materials rather than generic domain knowledge; whether "
        "core claims rely on specific artifacts (plans, results, feedback summaries) "
        "for validity.";
    content.levels = {{
        {1, "Externalized",
         "Generic reconstruction; highly substitutable across similar projects."},
        {2, "Lightly contextualized",
         "Internal details are illustrative/minor constraints; core remains standard; "
         "artifacts loosely summarized."},
        {3, "History-aware",
         "History shapes scope/priorities; removing history makes key recommendations "
         "vague/unjustified."},
        {4, "History-driven",
         "Backbone defined by internal items; recommendations derived from past "
         "outcomes; heavy artifact reuse as building blocks."},
        {5, "Continuation mode",
         "Seamless continuation of internal logs; meaning opaque without specific "
         "memory; generic knowledge mostly connective."},
    }};

    Axis pattern;
    pattern.name = "Pattern";
    pattern.definition =
        "Whether organization/decomposition/reasoning aligns with established internal "
        "routes and documented preferences vs. generic external templates.";
    pattern.levels = {{
        {1, "Generic pattern",
         "Standard framework; domain-general criteria; options in a vacuum."},
        {2, "Loosely echoing",
         "Occasional echoes; overall organization generic; cross-session mentions do "
         "not structure the response."},
        {3, "Aligned pattern",
         "Internal routes integrated within an accessible structure; options framed "
         "relative to the path."},
        {4, "Route-following",
         "Internal templates dominate; execution summaries serve as the primary "
         "skeleton."},
        {5, "Process continuation",
         "Next step in an idiosyncratic internal loop; unintelligible without the "
         "route; options are micro-adjustments."},
    }};

    Axis style;
    style.name = "Style";
    style.definition =
        "Insider vs. outsider stance; continuity in shorthand, terminology, and "
        "template language.";
    style.levels = {{
        {1, "External voice",
         "Standalone tutorial/report; neutral terminology; no insider shorthand or "
         "template reuse."},
        {2, "Lightly internalized",
         "Mostly external; occasional internal terms (often glossed); minimal template "
         "reuse."},
        {3, "Mixed voice",
         "Some shared background assumed; recognizable internal labels with partial "
         "reminders."},
        {4, "Insider collaboration",
         "Written for internal coordination; extensive unexplained shorthand; extensive "
         "template reuse."},
        {5, "Log-continuation",
         "Dense implicit context; discourse organized around internal naming schemes."},
    }};

    r.axes = {std::move(content), std::move(pattern), std::move(style)};
    r.aggregation_note =
        "The overall_memory_dependence_score is driven primarily by Content and "
        "Pattern; Style is a modifier and should not shift the overall score by more "
        "than one level.";
    r.usage_notes = {
        "Scores must reflect how structurally contingent the answer is on "
        "project-/course-specific history and internal artifacts.",
        "Judgments must be grounded in observable textual behaviors (content "
        "selection, reasoning structure, discourse style).",
        "Do not speculate about internal mechanisms.",
        "Treat unobservable cues as N/A; do not penalize absent artifacts that were "
        "never provided.",
    };
    return r;
  }();
  return rubric;
}

nlohmann::json to_json(const Rubric& rubric) {
  auto level_json = [](const Level& l) {
    return nlohmann::json{{"value", l.value}, {"name", l.name}, {"descriptor", l.descriptor}};
  };
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : rubric.levels) {
    levels.push_back(level_json(l));
  }
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : rubric.axes) {
    nlohmann::json axis_levels = nlohmann::json::array();
    for (const auto& l : a.levels) {
      axis_levels.push_back(level_json(l));
    }
    axes.push_back({{"name", a.name}, {"definition", a.definition}, {"levels", axis_levels}});
  }
  return nlohmann::json{
      {"field_name", rubric.field_name},
      {"levels", levels},
      {"axes", axes},
      {"aggregation_note", rubric.aggregation_note},
      {"usage_notes", rubric.usage_notes},
  };
}

Rubric from_json(const nlohmann::json& doc) {
  Rubric r;
  r.field_name = doc.at("field_name").get<std::string>();
  auto read_level = [](const nlohmann::json& j) {
    return Level{j.at("value").get<int>(), j.at("name").get<std::string>(),
                 j.at("descriptor").get<std::string>()};
  };
  const auto& levels = doc.at("levels");
  if (levels.size() != 5) {
    throw SchemaError("rubric must declare exactly 5 levels");
  }
  for (std::size_t i = 0; i < 5; ++i) {
    r.levels[i] = read_level(levels[i]);
  }
  const auto& axes = doc.at("axes");
  if (axes.size() != 3) {
    throw SchemaError("rubric must declare exactly 3 axes");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = axes[i];
    r.axes[i].name = a.at("name").get<std::string>();
    r.axes[i].definition = a.at("definition").get<std::string>();
    const auto& axis_levels = a.at("levels");
    if (axis_levels.size() != 5) {
      throw SchemaError("rubric axis " + r.axes[i].name + " must declare exactly 5 levels");
    }
    for (std::size_t k = 0; k < 5; ++k) {
      r.axes[i].levels[k] = read_level(axis_levels[k]);
    }
  }
  r.aggregation_note = doc.at("aggregation_note").get<std::string>();
  r.usage_notes = doc.at("usage_notes").get<std::vector<std::string>>();
  return r;
}

std::string render_judge_prompt(const Rubric& rubric) {
  std::string out;
  out += "You judge how strongly an answer depends on the project's own memory.\n";
  out += "Score the single latent axis Project Memory Dependence on a 1-5 scale:\n";
  for (const auto& l : rubric.levels) {
    out += std::to_string(l.value) + " = " + l.name + ". " + l.descriptor + "\n";
  }
  out += "\nScore each dimension, then aggregate:\n";
  for (const auto& a : rubric.axes) {
    out += a.name + ": " + a.definition + "\n";
    for (const auto& l : a.levels) {
      out += "  " + std::to_string(l.value) + " (" + l.name + "): " + l.descriptor + "\n";
    }
  }
  out += "\n" + rubric.aggregation_note + "\n";
  for (const auto& note : rubric.usage_notes) {
    out += "- " + note + "\n";
  }
  out += "\nRespond with a JSON object containing integer fields \"content\", "
         "\"pattern\", \"style\", \"" +
         rubric.field_name + "\", and a string field \"rationale\".";
  return out;
}

std::string task_rubric_prompt() {
  return "Rate how well the answer completes the user's task on a 1-5 scale: "
         "5 = fully completes the task with accurate, well-organized, actionable "
         "content; 4 = completes the task with minor gaps; 3 = addresses the task "
         "but misses depth or specifics; 2 = only partially on-task or substantially "
         "incomplete; 1 = off-task, empty, or unusable. Respond with a JSON object "
         "containing an integer field \"task_score\" and a string field \"rationale\".";
}

}  // namespace memsteer::rubric
