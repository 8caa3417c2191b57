#include "memsteer/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memsteer/backend.hpp"
#include "memsteer/datagen.hpp"
#include "memsteer/errors.hpp"
#include "memsteer/judge.hpp"
#include "memsteer/memory.hpp"
#include "memsteer/metrics.hpp"
#include "memsteer/querygen.hpp"
#include "memsteer/rubric.hpp"
#include "memsteer/scenario.hpp"
#include "memsteer/store.hpp"
#include "memsteer/timeline.hpp"
#include "memsteer/util.hpp"

namespace memsteer::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string scenario = "both";
  int n = 4;
  std::uint64_t seed = 1;
  std::string backend_config;  // --backend <config.json>: live endpoint
  std::string fixture_dir;     // --scripted <dir>: fixture replay
  std::string out = "run";
  std::size_t max_calls = 0;   // 0 = unlimited
  std::size_t max_tokens = 0;
};

/// All model-backed roles behind one switch: live endpoint, fixture replay,
/// or the built-in deterministic implementations.
struct Components {
  std::unique_ptr<backend::Budget> budget;
  std::unique_ptr<judge::JudgeBackend> judge_backend;
  std::unique_ptr<judge::GeneralScorer> general_scorer;
  std::unique_ptr<datagen::UserSimulator> simulator;
  std::unique_ptr<memory::Summarizer> summarizer;
  std::unique_ptr<timeline::CoherenceValidator> validator;
  std::vector<std::unique_ptr<datagen::PolicyBackend>> policies;
  std::vector<std::string> ids;

  std::vector<datagen::PolicyBackend*> policy_ptrs() const {
    std::vector<datagen::PolicyBackend*> out;
    for (const auto& p : policies) {
      out.push_back(p.get());
    }
    return out;
  }
};

timeline::OrderRuleValidator::Rule scenario_rule(scenario::ScenarioName name) {
  if (name == scenario::ScenarioName::research) {
    return {"writing", "analysis"};
  }
  return {"materials_revision", "review"};
}

Components make_components(const CommonOpts& opts) {
  Components c;
  std::size_t max_calls = opts.max_calls == 0 ? SIZE_MAX : opts.max_calls;
  std::size_t max_tokens = opts.max_tokens == 0 ? SIZE_MAX : opts.max_tokens;
  c.budget = std::make_unique<backend::Budget>(max_calls, max_tokens);

  bool remote = !opts.backend_config.empty() || !opts.fixture_dir.empty();
  if (remote) {
    auto config = backend::BackendConfig::from_env_and_file(opts.backend_config);
    if (!opts.fixture_dir.empty()) {
      config.fixture_dir = opts.fixture_dir;
    }
    backend::EndpointClient client(config, c.budget.get());
    c.judge_backend = std::make_unique<judge::BackendJudge>(client);
    c.general_scorer = std::make_unique<judge::BackendGeneralScorer>(client);
    c.simulator = std::make_unique<datagen::BackendSimulator>(client);
    c.summarizer = std::make_unique<memory::BackendSummarizer>(client);
    c.validator = std::make_unique<timeline::BackendValidator>(client);
    c.policies.push_back(std::make_unique<datagen::BackendPolicy>("remote", client));
    c.ids = {config.model.empty() ? std::string("remote") : config.model};
    return c;
  }

  c.judge_backend = std::make_unique<judge::HeuristicJudge>();
  c.general_scorer = std::make_unique<judge::HashGeneralScorer>();
  c.simulator = std::make_unique<datagen::ScriptedSimulator>();
  c.summarizer = std::make_unique<memory::TruncationSummarizer>();
  c.policies.push_back(std::make_unique<datagen::BuiltinPolicy>(
      "builtin-a", util::derive_seed(opts.seed, "policy/a")));
  c.policies.push_back(std::make_unique<datagen::BuiltinPolicy>(
      "builtin-b", util::derive_seed(opts.seed, "policy/b")));
  c.ids = {"heuristic-judge", "hash-scorer", "builtin-a", "builtin-b"};
  return c;
}

std::vector<scenario::ScenarioName> selected_scenarios(const std::string& flag) {
  if (flag == "both") {
    return {scenario::ScenarioName::research, scenario::ScenarioName::tutoring};
  }
  return {scenario::scenario_from_id(flag)};
}

void update_manifest(const fs::path& dir, const std::string& stage, std::uint64_t seed,
                     const std::map<std::string, std::size_t>& counts,
                     const nlohmann::json& params, const std::vector<std::string>& backends) {
  auto manifest = store::load_or_init_manifest(dir);
  for (const auto& [file, count] : counts) {
    manifest.counts[file] = count;
  }
  manifest.seeds[stage] = seed;
  manifest.params[stage] = params;
  for (const auto& id : backends) {
    if (std::find(manifest.backend_ids.begin(), manifest.backend_ids.end(), id) ==
        manifest.backend_ids.end()) {
      manifest.backend_ids.push_back(id);
    }
  }
  manifest.created_at = util::iso8601_utc_now();
  save_manifest(dir, manifest);
}

fs::path require_stage(const fs::path& dir, const std::string& file) {
  fs::path path = dir / file;
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw DependencyError("missing stage file " + path.string() +
                          " (run the upstream command first)");
  }
  return path;
}

std::string scenario_of_query(const querygen::Query& q) {
  auto dash = q.topic_ref.find('-');
  if (dash == std::string::npos) {
    throw SchemaError("query " + q.id + " has unrecognizable topic ref: " + q.topic_ref);
  }
  return q.topic_ref.substr(0, dash);
}

// ---- synth ----------------------------------------------------------------

struct SynthOpts : CommonOpts {
  int target_len = 8;
  double invalid_rate = 0.0;
  int max_len = 25;
  int max_retries = 3;
  std::string scenario_config;
};

// Loads type-table overrides from a JSON config file. Overridden tables must
// stay within the ids the proposer's dependency table knows, so the check can
// fail fast here instead of mid-synthesis.
std::map<scenario::ScenarioName, scenario::Scenario> load_scenario_tables(
    const std::vector<scenario::ScenarioName>& names, const std::string& config_path) {
  std::map<scenario::ScenarioName, scenario::Scenario> tables;
  for (auto name : names) {
    tables.emplace(name, scenario::builtin(name));
  }
  if (config_path.empty()) {
    return tables;
  }

  std::ifstream in(config_path);
  if (!in) {
    throw ConfigError("cannot open scenario config " + config_path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario config " + config_path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("scenarios") || !doc.at("scenarios").is_array()) {
    throw ConfigError("scenario config " + config_path +
                      ": expected an object with a \"scenarios\" array");
  }

  for (const auto& entry : doc.at("scenarios")) {
    scenario::Scenario s;
    try {
      s = scenario::scenario_from_json(entry);
    } catch (const Error& e) {
      throw ConfigError("scenario config " + config_path + ": " + e.what());
    }
    std::set<std::string> artifacts(s.artifact_types.begin(), s.artifact_types.end());
    for (const auto& et : s.event_types) {
      std::pair<std::set<std::string>, std::set<std::string>> row;
      try {
        row = timeline::ScriptedProposer::dependency_row(s.name, et);
      } catch (const Error&) {
        throw ConfigError("scenario config " + config_path + ": event type '" + et +
                          "' has no dependency table entry for scenario " +
                          scenario::scenario_id(s.name));
      }
      for (const auto& list : {row.first, row.second}) {
        for (const auto& at : list) {
          if (!artifacts.count(at)) {
            throw ConfigError("scenario config " + config_path + ": event type '" + et +
                              "' references artifact type '" + at +
                              "' missing from the config's artifact_types");
          }
        }
      }
    }
    if (!tables.count(s.name)) {
      continue;  // override for a scenario not selected this run
    }
    tables.insert_or_assign(s.name, std::move(s));
  }
  return tables;
}

void cmd_synth(const SynthOpts& opts) {
  auto scenarios = selected_scenarios(opts.scenario);
  auto tables = load_scenario_tables(scenarios, opts.scenario_config);
  auto bank = scenario::TopicBank::builtin();
  Components components = make_components(opts);

  // Without replacement, so every timeline owns its topic id.
  std::map<scenario::ScenarioName, std::vector<scenario::Topic>> pools;
  for (auto name : scenarios) {
    auto topics = bank.for_scenario(name);
    util::Rng rng(util::derive_seed(opts.seed, "topics/" + scenario::scenario_id(name)));
    rng.shuffle(topics);
    pools[name] = std::move(topics);
  }

  std::vector<timeline::Timeline> timelines;
  for (int i = 0; i < opts.n; ++i) {
    auto name = scenarios[static_cast<std::size_t>(i) % scenarios.size()];
    auto& pool = pools[name];
    if (pool.empty()) {
      throw ConfigError("topic bank exhausted for scenario " + scenario::scenario_id(name));
    }
    scenario::Topic topic = pool.back();
    pool.pop_back();

    timeline::ScriptedProposer proposer(
        tables.at(name),
        {opts.target_len, opts.invalid_rate,
         util::derive_seed(opts.seed, "proposer/" + std::to_string(i))});
    std::unique_ptr<timeline::CoherenceValidator> rule_validator;
    timeline::CoherenceValidator* validator = components.validator.get();
    if (!validator) {
      rule_validator = std::make_unique<timeline::OrderRuleValidator>(
          std::vector<timeline::OrderRuleValidator::Rule>{scenario_rule(name)});
      validator = rule_validator.get();
    }
    timelines.push_back(timeline::synthesize_timeline(
        topic, proposer, *validator, {opts.max_len, opts.max_retries}));
  }

  fs::create_directories(opts.out);
  store::write_records(fs::path(opts.out) / "timelines.jsonl", timelines);
  update_manifest(opts.out, "synth", opts.seed, {{"timelines.jsonl", timelines.size()}},
                  {{"scenario", opts.scenario},
                   {"n", opts.n},
                   {"target_len", opts.target_len},
                   {"invalid_rate", opts.invalid_rate},
                   {"max_len", opts.max_len},
                   {"scenario_config", opts.scenario_config}},
                  components.ids);
  std::cout << "wrote " << timelines.size() << " timelines to " << opts.out
            << "/timelines.jsonl\n";
}

// ---- queries ---------------------------------------------------------------

void cmd_queries(const CommonOpts& opts) {
  auto timelines = store::read_records<timeline::Timeline>(
      require_stage(opts.out, "timelines.jsonl"));
  auto templates = querygen::TemplateBank::builtin();

  std::vector<querygen::Query> queries;
  for (std::size_t ti = 0; ti < timelines.size(); ++ti) {
    auto batch = querygen::sample_queries(
        timelines[ti], opts.n, templates,
        util::derive_seed(opts.seed, "queries/" + std::to_string(ti)));
    queries.insert(queries.end(), batch.begin(), batch.end());
  }

  store::write_records(fs::path(opts.out) / "queries.jsonl", queries);
  update_manifest(opts.out, "queries", opts.seed, {{"queries.jsonl", queries.size()}},
                  {{"n_per_timeline", opts.n}}, {});
  std::cout << "wrote " << queries.size() << " queries to " << opts.out << "/queries.jsonl\n";
}

// ---- memories --------------------------------------------------------------

struct MemoriesOpts : CommonOpts {
  int window = 2;
};

void cmd_memories(const MemoriesOpts& opts) {
  auto timelines = store::read_records<timeline::Timeline>(
      require_stage(opts.out, "timelines.jsonl"));
  auto queries =
      store::read_records<querygen::Query>(require_stage(opts.out, "queries.jsonl"));
  Components components = make_components(opts);

  std::map<std::string, const timeline::Timeline*> by_topic;
  for (const auto& tl : timelines) {
    by_topic[tl.topic.id] = &tl;
  }

  std::vector<memory::MemoryBundle> bundles;
  for (const auto& q : queries) {
    auto it = by_topic.find(q.topic_ref);
    if (it == by_topic.end()) {
      throw DependencyError("query " + q.id + " references unknown topic " + q.topic_ref);
    }
    bundles.push_back(
        memory::build_memory(*it->second, q, *components.summarizer, opts.window));
  }

  store::write_records(fs::path(opts.out) / "memories.jsonl", bundles);
  update_manifest(opts.out, "memories", opts.seed, {{"memories.jsonl", bundles.size()}},
                  {{"window", opts.window}}, components.ids);
  std::cout << "wrote " << bundles.size() << " memory bundles to " << opts.out
            << "/memories.jsonl\n";
}

// ---- infer -----------------------------------------------------------------

struct InferOpts : CommonOpts {
  std::string mode = "none";
};

void cmd_infer(const InferOpts& opts) {
  auto queries =
      store::read_records<querygen::Query>(require_stage(opts.out, "queries.jsonl"));
  auto bundles =
      store::read_records<memory::MemoryBundle>(require_stage(opts.out, "memories.jsonl"));
  Components components = make_components(opts);

  std::map<std::string, const memory::MemoryBundle*> by_query;
  for (const auto& b : bundles) {
    by_query[b.query_ref] = &b;
  }

  auto mode = judge::mode_from_id(opts.mode);
  auto target = judge::mode_target_level(mode);

  std::vector<judge::Response> responses;
  for (const auto& q : queries) {
    auto it = by_query.find(q.id);
    if (it == by_query.end()) {
      throw DependencyError("no memory bundle for query " + q.id);
    }
    const auto& bundle = *it->second;

    judge::Response r;
    if (!opts.backend_config.empty() || !opts.fixture_dir.empty()) {
      // Remote path: the dependence instruction travels in the system prompt.
      auto* policy = dynamic_cast<datagen::BackendPolicy*>(components.policies[0].get());
      datagen::AugmentedQuery wrapper;
      wrapper.base = q;
      wrapper.target_preference = {target.value_or(3), metrics::PreferenceExpression::rubric};
      std::string instruction = judge::dependence_prompt(mode);
      wrapper.text = instruction.empty() ? q.text : instruction + "\n\n" + q.text;
      r = policy->generate(wrapper, bundle, 0);
    } else {
      auto* policy = dynamic_cast<datagen::BuiltinPolicy*>(components.policies[0].get());
      r.text = policy->generate_text(target, bundle, q.target_type,
                                     util::derive_seed(opts.seed, "infer/" + q.id));
      r.producer = policy->id();
      r.query_ref = q.id;
    }
    r.prompt_mode = judge::mode_id(mode);
    r.query_ref = q.id;
    responses.push_back(std::move(r));
  }

  store::write_records(fs::path(opts.out) / "responses.jsonl", responses);
  update_manifest(opts.out, "infer", opts.seed, {{"responses.jsonl", responses.size()}},
                  {{"mode", opts.mode}}, components.ids);
  std::cout << "wrote " << responses.size() << " responses to " << opts.out
            << "/responses.jsonl\n";
}

// ---- judge -----------------------------------------------------------------

struct JudgeOpts : CommonOpts {
  std::string mode;  // when set without a stage dir, print the prompt variant
  bool print_rubric = false;
};

int preference_for(const judge::Response& response, const querygen::Query& query,
                   std::uint64_t seed) {
  if (util::starts_with(response.prompt_mode, "preference:")) {
    return std::stoi(response.prompt_mode.substr(std::string("preference:").size()));
  }
  if (response.prompt_mode != "none") {
    auto target = judge::mode_target_level(judge::mode_from_id(response.prompt_mode));
    if (target) {
      return *target;
    }
  }
  // No conveyed preference: the evaluation set still assigns one per query.
  util::Rng rng(util::derive_seed(seed, "pref/" + query.id));
  return rng.range(1, 5);
}

void cmd_judge(const JudgeOpts& opts) {
  if (opts.print_rubric) {
    std::cout << rubric::to_json(rubric::builtin()).dump(2) << "\n";
    return;
  }
  if (opts.out.empty()) {
    if (opts.mode.empty()) {
      throw ConfigError("judge needs --out <dir> to judge a run, or --mode to print a "
                        "dependence-prompt variant");
    }
    std::cout << judge::dependence_prompt(judge::mode_from_id(opts.mode)) << "\n";
    return;
  }

  auto queries =
      store::read_records<querygen::Query>(require_stage(opts.out, "queries.jsonl"));
  auto bundles =
      store::read_records<memory::MemoryBundle>(require_stage(opts.out, "memories.jsonl"));
  auto responses =
      store::read_records<judge::Response>(require_stage(opts.out, "responses.jsonl"));
  Components components = make_components(opts);

  std::map<std::string, const querygen::Query*> query_by_id;
  for (const auto& q : queries) {
    query_by_id[q.id] = &q;
  }
  std::map<std::string, const memory::MemoryBundle*> bundle_by_query;
  for (const auto& b : bundles) {
    bundle_by_query[b.query_ref] = &b;
  }

  judge::ScoreBounds bounds;
  std::vector<judge::VerdictRecord> verdicts;
  for (const auto& response : responses) {
    auto qit = query_by_id.find(response.query_ref);
    if (qit == query_by_id.end()) {
      throw DependencyError("response references unknown query " + response.query_ref);
    }
    auto bit = bundle_by_query.find(response.query_ref);
    if (bit == bundle_by_query.end()) {
      throw DependencyError("no memory bundle for query " + response.query_ref);
    }
    const auto& query = *qit->second;
    const auto& bundle = *bit->second;

    auto verdict =
        judge::score_memory_dependence(response, query, bundle, *components.judge_backend);
    int task_score = judge::score_task(response, query, *components.judge_backend);
    auto general = judge::score_general(response, *components.general_scorer, bounds, true);

    judge::VerdictRecord record;
    record.query_ref = query.id;
    record.producer = response.producer;
    record.prompt_mode = response.prompt_mode;
    record.scenario = scenario_of_query(query);
    record.task = querygen::task_id(query.task);
    record.preference = preference_for(response, query, opts.seed);
    record.md_score = verdict.md_score;
    record.axis_scores = verdict.axis_scores;
    record.task_score = task_score;
    record.general_raw = general.raw;
    record.general_norm = general.normalized.value();
    record.delta_align = metrics::alignment_error(
        verdict.md_score, metrics::Preference{record.preference});
    record.rationale = verdict.rationale;
    verdicts.push_back(std::move(record));
  }

  store::write_records(fs::path(opts.out) / "verdicts.jsonl", verdicts);
  update_manifest(opts.out, "judge", opts.seed, {{"verdicts.jsonl", verdicts.size()}},
                  nlohmann::json::object(), components.ids);
  std::cout << "wrote " << verdicts.size() << " verdicts to " << opts.out
            << "/verdicts.jsonl\n";
}

// ---- eval / report ---------------------------------------------------------

metrics::EvalReport report_from_verdicts(const fs::path& dir) {
  auto verdicts = store::read_records<judge::VerdictRecord>(
      require_stage(dir, "verdicts.jsonl"));
  if (verdicts.empty()) {
    throw DependencyError("verdicts.jsonl in " + dir.string() +
                          " is empty; judge a run first");
  }
  std::vector<metrics::EvalEntry> entries;
  for (const auto& v : verdicts) {
    entries.push_back({v.scenario, v.task, v.md_score, v.preference, v.prompt_mode});
  }
  return metrics::build_eval_report(entries);
}

struct EvalOpts : CommonOpts {
  std::string annotations;  // optional JSONL of human pairwise choices
};

void cmd_eval(const EvalOpts& opts) {
  auto report = report_from_verdicts(opts.out);
  auto doc = metrics::report_to_json(report);

  if (!opts.annotations.empty()) {
    std::vector<metrics::AgreementItem> items;
    for (const auto& j : store::read_jsonl(opts.annotations)) {
      items.push_back({j.at("score_a").get<int>(), j.at("score_b").get<int>(),
                       j.at("human_choice").get<std::string>().at(0)});
    }
    auto stats = metrics::pairwise_agreement(items);
    nlohmann::json buckets = nlohmann::json::object();
    for (const auto& [gap, bucket] : stats.by_gap) {
      buckets[std::to_string(gap)] = {{"count", bucket.count},
                                      {"agreements", bucket.agreements},
                                      {"agreement_rate", bucket.agreement_rate}};
    }
    doc["agreement"] = {{"total", stats.total},
                        {"agreement_rate", stats.agreement_rate},
                        {"rank_correlation", stats.rank_correlation},
                        {"by_gap", buckets}};
  }

  fs::path dir(opts.out);
  util::write_file_atomic(dir / "eval.json", doc.dump(2) + "\n");
  util::write_file_atomic(dir / "delta_align.csv", metrics::report_to_csv(report));
  util::write_file_atomic(dir / "confusion.csv", report.confusion.to_csv());
  util::write_file_atomic(dir / "eval.txt", metrics::report_to_text(report));
  std::cout << metrics::report_to_text(report);
}

void cmd_report(const CommonOpts& opts) {
  auto report = report_from_verdicts(opts.out);
  fs::path dir(opts.out);
  util::write_file_atomic(dir / "report.json",
                          metrics::report_to_json(report).dump(2) + "\n");
  util::write_file_atomic(dir / "report.csv", metrics::report_to_csv(report));
  util::write_file_atomic(dir / "report.txt", metrics::report_to_text(report));

  // Corpus statistics ride along when the corpus stages are present.
  std::error_code ec;
  if (fs::exists(dir / "timelines.jsonl", ec) && fs::exists(dir / "queries.jsonl", ec)) {
    auto timelines = store::read_records<timeline::Timeline>(dir / "timelines.jsonl");
    auto queries = store::read_records<querygen::Query>(dir / "queries.jsonl");
    auto stats = store::corpus_stats(timelines, queries);
    util::write_file_atomic(dir / "corpus_stats.json", stats.to_json().dump(2) + "\n");
    util::write_file_atomic(dir / "corpus_stats.txt", stats.to_text());
  }
  std::cout << metrics::report_to_text(report);
}

// ---- datagen ---------------------------------------------------------------

struct DatagenOpts : CommonOpts {
  int sft = 70;
  int rl = 20;
  int keep = 1;
  int n_per_policy = 2;
  int window = 2;
  std::string expression = "tag";
};

void cmd_datagen(const DatagenOpts& opts) {
  auto timelines = store::read_records<timeline::Timeline>(
      require_stage(opts.out, "timelines.jsonl"));
  Components components = make_components(opts);
  auto templates = querygen::TemplateBank::builtin();

  datagen::DatagenConfig config;
  config.n_sft = opts.sft;
  config.n_rl = opts.rl;
  config.keep = opts.keep;
  config.n_per_policy = opts.n_per_policy;
  config.window = opts.window;
  config.seed = opts.seed;
  config.expression = metrics::expression_from_id(opts.expression);

  auto result = datagen::run_datagen(timelines, config, *components.simulator,
                                     *components.judge_backend, *components.general_scorer,
                                     components.policy_ptrs(), templates);

  store::write_records(fs::path(opts.out) / "sft.jsonl", result.sft);
  store::write_records(fs::path(opts.out) / "rl.jsonl", result.rl);
  update_manifest(opts.out, "datagen", opts.seed,
                  {{"sft.jsonl", result.sft.size()}, {"rl.jsonl", result.rl.size()}},
                  {{"sft", opts.sft},
                   {"rl", opts.rl},
                   {"keep", opts.keep},
                   {"n_per_policy", opts.n_per_policy},
                   {"expression", opts.expression}},
                  components.ids);
  std::cout << "wrote " << result.sft.size() << " SFT and " << result.rl.size()
            << " RL records to " << opts.out << "\n";
}

// ---- mask-compare ----------------------------------------------------------

void cmd_mask_compare(const CommonOpts& opts) {
  auto queries =
      store::read_records<querygen::Query>(require_stage(opts.out, "queries.jsonl"));
  auto bundles =
      store::read_records<memory::MemoryBundle>(require_stage(opts.out, "memories.jsonl"));
  Components components = make_components(opts);

  std::map<std::string, const memory::MemoryBundle*> by_query;
  for (const auto& b : bundles) {
    by_query[b.query_ref] = &b;
  }

  datagen::BuiltinPolicy policy("mask-compare", util::derive_seed(opts.seed, "mask"));

  std::map<std::string, std::vector<metrics::WinVerdict>> per_task;
  std::vector<metrics::WinVerdict> overall;
  std::map<std::string, const querygen::Query*> query_by_id;

  for (const auto& q : queries) {
    auto it = by_query.find(q.id);
    if (it == by_query.end()) {
      throw DependencyError("no memory bundle for query " + q.id);
    }
    const auto& full = *it->second;
    query_by_id[q.id] = &q;

    for (int p = 1; p <= 5; ++p) {
      memory::DeterministicMaskSelector selector(q.target_type);
      auto masked = memory::mask_memory(full, p, selector);

      judge::Response masked_response;
      masked_response.text = policy.generate_text(
          std::nullopt, masked, q.target_type,
          util::derive_seed(opts.seed, "mask/" + q.id + "/" + std::to_string(p)));
      masked_response.producer = "masking";
      masked_response.prompt_mode = "masked:" + std::to_string(p);
      masked_response.query_ref = q.id;

      judge::Response steered_response;
      steered_response.text = policy.generate_text(
          p, full, q.target_type,
          util::derive_seed(opts.seed, "steer/" + q.id + "/" + std::to_string(p)));
      steered_response.producer = "steering";
      steered_response.prompt_mode = "preference:" + std::to_string(p);
      steered_response.query_ref = q.id;

      // Both arms are judged against the full bundle, which is what the
      // masked arm was hiding parts of.
      auto d_mask =
          judge::score_memory_dependence(masked_response, q, full, *components.judge_backend)
              .md_score;
      auto d_steer =
          judge::score_memory_dependence(steered_response, q, full, *components.judge_backend)
              .md_score;

      metrics::Preference pref{p};
      int delta_mask = metrics::alignment_error(d_mask, pref);
      int delta_steer = metrics::alignment_error(d_steer, pref);
      metrics::WinVerdict verdict = delta_steer < delta_mask   ? metrics::WinVerdict::win
                                    : delta_steer > delta_mask ? metrics::WinVerdict::lose
                                                               : metrics::WinVerdict::tie;
      per_task[querygen::task_id(q.task)].push_back(verdict);
      overall.push_back(verdict);
    }
  }

  if (overall.empty()) {
    throw DependencyError("no queries to compare; run queries/memories first");
  }

  auto rate_json = [](const metrics::WinRate& r) {
    return nlohmann::json{
        {"win", r.win.value()},   {"lose", r.lose.value()},   {"tie", r.tie.value()},
        {"win_exact", {r.win.num(), r.win.den()}},
        {"lose_exact", {r.lose.num(), r.lose.den()}},
        {"tie_exact", {r.tie.num(), r.tie.den()}},
    };
  };

  nlohmann::json tasks = nlohmann::json::object();
  std::string csv = "task,win,lose,tie\n";
  for (const auto& [task, verdicts] : per_task) {
    auto rate = metrics::win_rate(verdicts);
    tasks[task] = rate_json(rate);
    csv += task + "," + std::to_string(rate.win.value()) + "," +
           std::to_string(rate.lose.value()) + "," + std::to_string(rate.tie.value()) + "\n";
  }
  auto overall_rate = metrics::win_rate(overall);
  csv += "all," + std::to_string(overall_rate.win.value()) + "," +
         std::to_string(overall_rate.lose.value()) + "," +
         std::to_string(overall_rate.tie.value()) + "\n";

  nlohmann::json doc{
      {"comparison", "steering vs. memory masking, by alignment error"},
      {"per_task", tasks},
      {"overall", rate_json(overall_rate)},
      {"pairs", overall.size()},
  };
  fs::path dir(opts.out);
  util::write_file_atomic(dir / "mask_compare.json", doc.dump(2) + "\n");
  util::write_file_atomic(dir / "win_rates.csv", csv);
  std::cout << "steering wins " << overall_rate.win.value() << ", loses "
            << overall_rate.lose.value() << ", ties " << overall_rate.tie.value() << " over "
            << overall.size() << " (query, preference) pairs\n";
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_out_default = true) {
  cmd->add_option("--scenario", opts.scenario, "research | tutoring | both")
      ->check(CLI::IsMember({"research", "tutoring", "both"}));
  cmd->add_option("--seed", opts.seed, "deterministic run seed");
  cmd->add_option("--backend", opts.backend_config, "backend endpoint config JSON");
  cmd->add_option("--scripted", opts.fixture_dir, "fixture directory for scripted replay");
  if (with_out_default) {
    cmd->add_option("--out", opts.out, "run directory for stage files");
  }
  cmd->add_option("--max-calls", opts.max_calls, "live-call budget (0 = unlimited)");
  cmd->add_option("--max-tokens", opts.max_tokens, "token budget (0 = unlimited)");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"memsteer: long-horizon memory-dependence pipeline"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* synth_cmd = app.add_subcommand("synth", "synthesize timelines");
  add_common(synth_cmd, synth);
  synth_cmd->add_option("--n", synth.n, "number of timelines");
  synth_cmd->add_option("--len", synth.target_len, "target events per timeline");
  synth_cmd->add_option("--invalid-rate", synth.invalid_rate,
                        "chance of an infeasible proposal per step");
  synth_cmd->add_option("--max-len", synth.max_len, "hard cap on timeline length");
  synth_cmd
      ->add_option("--scenario-config", synth.scenario_config,
                   "JSON file overriding the built-in scenario type tables "
                   "(see assets/scenarios.json)")
      ->check(CLI::ExistingFile);

  CommonOpts queries;
  queries.n = 3;
  auto* queries_cmd = app.add_subcommand("queries", "instantiate task queries");
  add_common(queries_cmd, queries);
  queries_cmd->add_option("--n", queries.n, "queries per timeline");

  MemoriesOpts memories;
  auto* memories_cmd = app.add_subcommand("memories", "build memory bundles");
  add_common(memories_cmd, memories);
  memories_cmd->add_option("--window", memories.window, "intra-session recency window");

  InferOpts infer;
  auto* infer_cmd = app.add_subcommand("infer", "generate responses");
  add_common(infer_cmd, infer);
  infer_cmd->add_option("--mode", infer.mode, "dependence prompt mode")
      ->check(CLI::IsMember({"none", "low", "medium", "high"}));

  JudgeOpts judge_opts;
  judge_opts.out.clear();
  auto* judge_cmd = app.add_subcommand("judge", "score responses (or print prompt variants)");
  add_common(judge_cmd, judge_opts, false);
  judge_cmd->add_option("--out", judge_opts.out, "run directory to judge");
  judge_cmd->add_option("--mode", judge_opts.mode,
                        "print this dependence-prompt variant and exit")
      ->check(CLI::IsMember({"none", "low", "medium", "high"}));
  judge_cmd->add_flag("--rubric", judge_opts.print_rubric, "print the rubric as JSON");

  EvalOpts eval;
  auto* eval_cmd = app.add_subcommand("eval", "compute evaluation statistics");
  add_common(eval_cmd, eval);
  eval_cmd->add_option("--annotations", eval.annotations,
                       "JSONL of human pairwise annotations");

  DatagenOpts datagen_opts;
  auto* datagen_cmd = app.add_subcommand("datagen", "build preference-aligned training data");
  add_common(datagen_cmd, datagen_opts);
  datagen_cmd->add_option("--sft", datagen_opts.sft, "SFT records to emit");
  datagen_cmd->add_option("--rl", datagen_opts.rl, "RL records to emit");
  datagen_cmd->add_option("--keep", datagen_opts.keep, "records kept per base query");
  datagen_cmd->add_option("--n-per-policy", datagen_opts.n_per_policy,
                          "candidates per policy");
  datagen_cmd->add_option("--window", datagen_opts.window, "intra-session recency window");
  datagen_cmd->add_option("--preference-expression", datagen_opts.expression,
                          "how p_aug is conveyed")
      ->check(CLI::IsMember({"natural", "tag", "rubric"}));

  CommonOpts mask;
  auto* mask_cmd =
      app.add_subcommand("mask-compare", "steering vs. masking win rates");
  add_common(mask_cmd, mask);

  CommonOpts report;
  auto* report_cmd = app.add_subcommand("report", "render the evaluation report");
  add_common(report_cmd, report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    if (synth_cmd->parsed()) {
      cmd_synth(synth);
    } else if (queries_cmd->parsed()) {
      cmd_queries(queries);
    } else if (memories_cmd->parsed()) {
      cmd_memories(memories);
    } else if (infer_cmd->parsed()) {
      cmd_infer(infer);
    } else if (judge_cmd->parsed()) {
      cmd_judge(judge_opts);
    } else if (eval_cmd->parsed()) {
      cmd_eval(eval);
    } else if (datagen_cmd->parsed()) {
      cmd_datagen(datagen_opts);
    } else if (mask_cmd->parsed()) {
      cmd_mask_compare(mask);
    } else if (report_cmd->parsed()) {
      cmd_report(report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "memsteer: config error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config);
  } catch (const DependencyError& e) {
    std::cerr << "memsteer: dependency error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::dependency);
  } catch (const TransportError& e) {
    std::cerr << "memsteer: transport error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::transport);
  } catch (const BudgetError& e) {
    std::cerr << "memsteer: budget error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::budget);
  } catch (const std::exception& e) {
    std::cerr << "memsteer: error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::internal);
  }
  return static_cast<int>(ExitCode::ok);
}

}  // namespace memsteer::cli
