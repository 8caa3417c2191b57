#include "memsteer/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "memsteer/errors.hpp"
#include "memsteer/rubric.hpp"
#include "memsteer/util.hpp"

namespace memsteer::datagen {

const std::vector<std::string>& preference_tags() {
  static const std::vector<std::string> tags = {"Minimal", "Low", "Medium", "High", "Maximal"};
  return tags;
}

void to_json(nlohmann::json& j, const AugmentedQuery& q) {
  j = nlohmann::json{
      {"base", q.base},
      {"target_preference", q.target_preference},
      {"text", q.text},
      {"realigned_to", q.realigned_to ? nlohmann::json(*q.realigned_to) : nlohmann::json()},
  };
}

void from_json(const nlohmann::json& j, AugmentedQuery& q) {
  q.base = j.at("base").get<querygen::Query>();
  q.target_preference = j.at("target_preference").get<metrics::Preference>();
  q.text = j.at("text").get<std::string>();
  if (j.contains("realigned_to") && !j.at("realigned_to").is_null()) {
    q.realigned_to = j.at("realigned_to").get<int>();
  } else {
    q.realigned_to = std::nullopt;
  }
}

void to_json(nlohmann::json& j, const TrainingRecord& r) {
  j = nlohmann::json{
      {"id", r.id},
      {"query", r.query},
      {"memory", r.memory},
      {"general_raw", r.general_raw},
      {"split", r.split},
  };
  if (r.response) {
    j["response"] = *r.response;
  } else {
    j["response"] = nullptr;
  }
  if (r.verdicts) {
    j["verdicts"] = {
        {"md", r.verdicts->md}, {"task", r.verdicts->task}, {"general", r.verdicts->general}};
  } else {
    j["verdicts"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, TrainingRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.query = j.at("query").get<AugmentedQuery>();
  r.memory = j.at("memory").get<memory::MemoryBundle>();
  r.general_raw = j.at("general_raw").get<double>();
  r.split = j.at("split").get<std::string>();
  if (!j.at("response").is_null()) {
    r.response = j.at("response").get<judge::Response>();
  }
  if (!j.at("verdicts").is_null()) {
    const auto& v = j.at("verdicts");
    r.verdicts = metrics::VerdictScores{v.at("md").get<int>(), v.at("task").get<int>(),
                                        v.at("general").get<double>()};
  }
}

std::string ScriptedSimulator::rewrite(const querygen::Query& query, int preference, int) {
  static const std::vector<std::string> framings = {
      "Treat this as a fresh start and rely on general best practices. ",
      "Lean mostly on general knowledge, with only a light glance at our records. ",
      "Balance our project history with general knowledge. ",
      "Ground your answer in our own plans and results so far. ",
      "Continue directly from our internal notes, as if writing the next entry. ",
  };
  if (preference < 1 || preference > 5) {
    throw ContractError("preference must be in 1..5");
  }
  return framings[static_cast<std::size_t>(preference - 1)] + query.text;
}

std::string rewrite_prompt() {
  return "Rewrite the user's query so that it implicitly conveys how much the "
         "assistant should rely on its stored memory of this project, on a 1-5 "
         "scale (1 = answer from general knowledge alone, 5 = continue directly "
         "from the project's own records). Keep the task itself unchanged, do not "
         "mention scores or levels explicitly, and reply with the rewritten query "
         "only.";
}

std::string BackendSimulator::rewrite(const querygen::Query& query, int preference,
                                      int attempt) {
  std::string user =
      "Target reliance level: " + std::to_string(preference) + "\nQuery: " + query.text;
  if (attempt > 1) {
    user += "\n(Your previous rewrite repeated the query verbatim; produce a "
            "genuinely rewritten version.)";
  }
  return client_.chat(backend::Role::simulator,
                      {{"system", rewrite_prompt()}, {"user", user}});
}

namespace {

std::string express(const querygen::Query& query, const metrics::Preference& preference,
                    UserSimulator& simulator) {
  switch (preference.expression) {
    case metrics::PreferenceExpression::tag:
      return query.text + " [memory-dependence: " +
             preference_tags()[static_cast<std::size_t>(preference.value - 1)] + "]";
    case metrics::PreferenceExpression::rubric: {
      const auto& level = rubric::builtin().level(preference.value);
      return "Follow memory-dependence level " + std::to_string(level.value) + " (" +
             level.name + "). " + query.text;
    }
    case metrics::PreferenceExpression::natural: {
      for (int attempt = 1; attempt <= 2; ++attempt) {
        std::string text = simulator.rewrite(query, preference.value, attempt);
        if (text != query.text) {
          return text;
        }
      }
      throw RewriteError("simulator echoed the query verbatim twice: " + query.id);
    }
  }
  throw ContractError("unknown preference expression");
}

}  // namespace

AugmentedQuery augment_query(const querygen::Query& query, const metrics::Preference& p_aug,
                             UserSimulator& simulator) {
  if (p_aug.value < 1 || p_aug.value > 5) {
    throw ContractError("p_aug must be in 1..5");
  }
  AugmentedQuery out;
  out.base = query;
  out.target_preference = p_aug;
  out.text = express(query, p_aug, simulator);
  return out;
}

AugmentedQuery realign_query(const querygen::Query& query, int realized_md,
                             metrics::PreferenceExpression expression,
                             UserSimulator& simulator) {
  if (realized_md < 1 || realized_md > 5) {
    throw ContractError("realized_md must be in 1..5");
  }
  AugmentedQuery out =
      augment_query(query, metrics::Preference{realized_md, expression}, simulator);
  out.realigned_to = realized_md;
  return out;
}

namespace {

/// Filler vocabulary disjoint from typical memory text; entries colliding
/// with the memory's own words are skipped at use time.
const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "generally",  "principle", "framework",  "systematic", "baseline",  "canonical",
      "textbook",   "standard",  "widespread", "convention", "orthodox",  "classical",
      "elementary", "axiomatic", "prototypical", "universal", "normative", "customary",
      "mainstream", "boilerplate", "formulaic", "stock",     "vanilla",   "generic",
      "reference",  "handbook",  "primer",     "tutorial",   "overview",  "survey",
  };
  return words;
}

std::set<std::string> memory_word_set(const memory::MemoryBundle& memory) {
  std::string text = memory.profile;
  for (const auto& item : memory.all_items()) {
    text += "\n" + item.summary;
  }
  auto words = util::content_words(text);
  return {words.begin(), words.end()};
}

}  // namespace

std::string BuiltinPolicy::generate_text(std::optional<int> target_level,
                                         const memory::MemoryBundle& memory,
                                         const std::string& target_type,
                                         std::uint64_t sample_seed) const {
  util::Rng rng(sample_seed);

  int level;
  if (target_level) {
    level = *target_level;
    if (level < 1 || level > 5) {
      throw ContractError("target_level must be in 1..5");
    }
    if (jitter_) {
      double draw = rng.unit();
      if (draw < 0.15) {
        level -= 1;
      } else if (draw >= 0.85) {
        level += 1;
      }
      level = std::clamp(level, 1, 5);
    }
  } else {
    // Anchored default: heavy reliance on memory.
    level = rng.chance(0.5) ? 4 : 5;
  }

  auto mem_words_set = memory_word_set(memory);
  std::size_t m = mem_words_set.size();
  if (m == 0) {
    level = 1;
  }

  // The target-type mention is part of the response, so its content words
  // enter the overlap arithmetic: the ones already in memory add to the
  // intersection, the novel ones to the union.
  std::string mention = "On " + util::prettify(target_type) + ": ";
  std::set<std::string> mention_set;
  for (const auto& w : util::content_words(mention)) {
    mention_set.insert(w);
  }
  std::vector<std::string> in_mem;
  std::size_t o = 0;
  for (const auto& w : mention_set) {
    if (mem_words_set.contains(w)) {
      in_mem.push_back(w);
    } else {
      ++o;
    }
  }

  // Judge buckets in twentieths of Jaccard overlap: level L covers
  // [lo20[L], hi20[L]) except level 5, which is closed above.
  static constexpr std::size_t lo20[] = {0, 0, 1, 3, 6, 10};
  static constexpr std::size_t hi20[] = {0, 1, 3, 6, 10, 21};
  static constexpr double mid[] = {0.0, 0.0, 0.10, 0.22, 0.40, 1.0};

  // With the mention kept, intersection = k (chosen words, a superset of
  // in_mem) and union = m + o + f; without it, i = o = 0. Picks k and f so
  // k/(m+o+f) sits in the level's bucket, dropping the mention for the rare
  // tiny bundle where its novel words make the bucket unreachable.
  bool with_mention = true;
  std::size_t k = 0;
  std::size_t f = 0;
  auto land = [&] {
    std::size_t i = with_mention ? in_mem.size() : 0;
    std::size_t base = m + (with_mention ? o : 0);
    if (level == 1) {
      k = 0;
      std::size_t need = 20 * i + 1;
      f = std::max<std::size_t>(14, need > base ? need - base : 0);
      return true;
    }
    if (level == 5) {
      k = m;
      f = 0;
      return 20 * m >= lo20[5] * base;
    }
    auto lo = lo20[static_cast<std::size_t>(level)];
    auto hi = hi20[static_cast<std::size_t>(level)];
    std::size_t kmin = std::max<std::size_t>(1, i);
    auto aim = static_cast<std::size_t>(
        std::llround(mid[static_cast<std::size_t>(level)] * static_cast<double>(base)));
    k = std::clamp(aim, kmin, m);
    if (20 * k / lo < base) {
      k = std::clamp((lo * base + 19) / 20, kmin, m);
    }
    std::size_t dmax = 20 * k / lo;
    if (dmax < base) {
      return false;
    }
    std::size_t dmin = std::max(20 * k / hi + 1, base);
    auto d = static_cast<std::size_t>(std::llround(
        static_cast<double>(k) / mid[static_cast<std::size_t>(level)]));
    d = std::clamp(d, dmin, dmax);
    f = d - base;
    return true;
  };
  if (!land()) {
    with_mention = false;
    land();
  }

  std::vector<std::string> ordered = in_mem;
  std::vector<std::string> rest;
  for (const auto& w : mem_words_set) {
    if (std::find(in_mem.begin(), in_mem.end(), w) == in_mem.end()) {
      rest.push_back(w);
    }
  }
  rng.shuffle(rest);
  ordered.insert(ordered.end(), rest.begin(), rest.end());
  std::vector<std::string> chosen(ordered.begin(),
                                  ordered.begin() + static_cast<std::ptrdiff_t>(k));

  std::vector<std::string> fillers;
  auto usable = [&](const std::string& w) {
    return !mem_words_set.contains(w) && !mention_set.contains(w);
  };
  for (const auto& w : filler_words()) {
    if (fillers.size() >= f) {
      break;
    }
    if (usable(w)) {
      fillers.push_back(w);
    }
  }
  for (std::size_t i = 0; fillers.size() < f; ++i) {
    std::string w = "aspect" + std::to_string(i);
    if (usable(w)) {
      fillers.push_back(w);
    }
  }

  // Only stopwords and sub-3-character glue may appear outside the two
  // controlled word lists, so the overlap arithmetic stays exact.
  std::string out = with_mention ? mention : "";
  if (!chosen.empty()) {
    out += "we go on with " + util::join(chosen, " ") + ". ";
  }
  if (!fillers.empty()) {
    out += "And so: " + util::join(fillers, " ") + ".";
  }
  if (chosen.empty() && fillers.empty()) {
    out += "ok.";
  }
  return out;
}

judge::Response BuiltinPolicy::generate(const AugmentedQuery& query,
                                        const memory::MemoryBundle& memory,
                                        int sample_index) {
  std::uint64_t sample_seed = util::derive_seed(
      seed_, id_ + "/" + query.base.id + "/" + std::to_string(sample_index));
  judge::Response r;
  r.text = generate_text(query.target_preference.value, memory, query.base.target_type,
                         sample_seed);
  r.producer = id_;
  r.prompt_mode = "preference:" + std::to_string(query.target_preference.value);
  r.query_ref = query.base.id;
  return r;
}

judge::Response BackendPolicy::generate(const AugmentedQuery& query,
                                        const memory::MemoryBundle& memory, int sample_index) {
  std::string context = "User profile: " + memory.profile + "\nMemory:\n";
  for (const auto& item : memory.all_items()) {
    context += "- " + item.summary + "\n";
  }
  backend::Params params;
  params.seed = static_cast<std::uint64_t>(sample_index);
  judge::Response r;
  r.text = client_.chat(backend::Role::policy,
                        {{"system", context}, {"user", query.text}}, params);
  r.producer = id_;
  r.prompt_mode = "preference:" + std::to_string(query.target_preference.value);
  r.query_ref = query.base.id;
  return r;
}

CandidateSet sample_candidates(const AugmentedQuery& q_aug, const memory::MemoryBundle& memory,
                               const std::vector<PolicyBackend*>& policies, int n_per_policy) {
  if (policies.empty()) {
    throw ContractError("sample_candidates needs at least one policy backend");
  }
  CandidateSet out;
  for (auto* policy : policies) {
    for (int i = 0; i < n_per_policy; ++i) {
      try {
        out.responses.push_back(policy->generate(q_aug, memory, i));
      } catch (const TransportError& e) {
        out.errors.push_back("backend " + policy->id() + ": " + e.what());
        break;  // a dead backend will not recover for later samples
      }
    }
  }
  return out;
}

std::vector<TrainingRecord> quality_filter(const std::vector<TrainingRecord>& candidates,
                                           int keep) {
  if (keep < 1) {
    throw ContractError("keep must be >= 1");
  }
  std::map<std::string, std::vector<const TrainingRecord*>> by_base;
  for (const auto& r : candidates) {
    if (!r.verdicts) {
      throw ContractError("quality_filter requires judged candidates: " + r.id);
    }
    by_base[r.query.base.id].push_back(&r);
  }

  std::vector<TrainingRecord> out;
  for (auto& [base_id, group] : by_base) {
    std::sort(group.begin(), group.end(),
              [](const TrainingRecord* a, const TrainingRecord* b) {
                double sa = a->verdicts->task + a->verdicts->general;
                double sb = b->verdicts->task + b->verdicts->general;
                if (sa != sb) {
                  return sa > sb;
                }
                return a->id < b->id;
              });
    for (std::size_t i = 0; i < group.size() && i < static_cast<std::size_t>(keep); ++i) {
      out.push_back(*group[i]);
    }
  }
  return out;
}

DatagenResult run_datagen(const std::vector<timeline::Timeline>& timelines,
                          const DatagenConfig& config, UserSimulator& simulator,
                          judge::JudgeBackend& judge_backend,
                          judge::GeneralScorer& general_scorer,
                          const std::vector<PolicyBackend*>& policies,
                          const querygen::TemplateBank& templates) {
  if (timelines.empty()) {
    throw ContractError("run_datagen needs at least one timeline");
  }
  int n_sft_base = (config.n_sft + config.keep - 1) / config.keep;
  int n_base = n_sft_base + config.n_rl;

  // One base-query pool, drawn round-robin across timelines, then split into
  // disjoint SFT and RL ranges.
  std::vector<std::pair<querygen::Query, const timeline::Timeline*>> pool;
  std::uint64_t qseed = util::derive_seed(config.seed, "datagen/queries");
  int per_timeline =
      (n_base + static_cast<int>(timelines.size()) - 1) / static_cast<int>(timelines.size());
  for (std::size_t ti = 0; ti < timelines.size(); ++ti) {
    const auto& tl = timelines[ti];
    auto queries = querygen::sample_queries(
        tl, per_timeline, templates, util::derive_seed(qseed, "tl/" + std::to_string(ti)));
    for (auto& q : queries) {
      pool.emplace_back(std::move(q), &tl);
      if (static_cast<int>(pool.size()) == n_base) {
        break;
      }
    }
    if (static_cast<int>(pool.size()) == n_base) {
      break;
    }
  }
  if (static_cast<int>(pool.size()) < n_base) {
    throw ContractError("not enough timelines to draw " + std::to_string(n_base) +
                        " base queries");
  }

  memory::TruncationSummarizer summarizer;
  util::Rng pref_rng(util::derive_seed(config.seed, "datagen/preferences"));

  DatagenResult result;

  for (int qi = 0; qi < n_sft_base; ++qi) {
    const auto& [query, tl] = pool[static_cast<std::size_t>(qi)];
    auto bundle = memory::build_memory(*tl, query, summarizer, config.window);

    metrics::Preference p_aug{pref_rng.range(1, 5), config.expression};
    auto q_aug = augment_query(query, p_aug, simulator);

    auto candidates = sample_candidates(q_aug, bundle, policies, config.n_per_policy);

    std::vector<TrainingRecord> judged;
    for (std::size_t ci = 0; ci < candidates.responses.size(); ++ci) {
      const auto& response = candidates.responses[ci];
      // Realized dependence is judged against the original query and memory.
      auto verdict = judge::score_memory_dependence(response, query, bundle, judge_backend);
      int task = judge::score_task(response, query, judge_backend);
      auto general =
          judge::score_general(response, general_scorer, config.general_bounds, true);

      TrainingRecord record;
      record.id = query.id + "#" + response.producer + "#" + std::to_string(ci);
      record.query = realign_query(query, verdict.md_score, config.expression, simulator);
      record.memory = bundle;
      record.response = response;
      record.verdicts =
          metrics::VerdictScores{verdict.md_score, task, general.normalized.value()};
      record.general_raw = general.raw;
      record.split = "sft";
      judged.push_back(std::move(record));
    }

    auto kept = quality_filter(judged, config.keep);
    for (auto& r : kept) {
      result.sft.push_back(std::move(r));
      if (static_cast<int>(result.sft.size()) == config.n_sft) {
        break;
      }
    }
    if (static_cast<int>(result.sft.size()) == config.n_sft) {
      break;
    }
  }

  for (int qi = n_sft_base; qi < n_base; ++qi) {
    const auto& [query, tl] = pool[static_cast<std::size_t>(qi)];
    auto bundle = memory::build_memory(*tl, query, summarizer, config.window);

    metrics::Preference p_aug{pref_rng.range(1, 5), config.expression};
    TrainingRecord record;
    record.id = query.id + "#rl";
    record.query = augment_query(query, p_aug, simulator);
    record.memory = bundle;
    record.split = "rl";
    result.rl.push_back(std::move(record));
    if (static_cast<int>(result.rl.size()) == config.n_rl) {
      break;
    }
  }

  return result;
}

}  // namespace memsteer::datagen
