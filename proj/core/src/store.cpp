#include "memsteer/store.hpp"

#include <sstream>

#include "memsteer/errors.hpp"
#include "memsteer/util.hpp"

namespace memsteer::store {

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& records) {
  std::string out;
  for (const auto& record : records) {
    if (!record.is_object()) {
      throw ContractError("JSONL records must be JSON objects");
    }
    nlohmann::json stamped = record;
    stamped["schema_version"] = kSchemaVersion;
    out += stamped.dump();
    out += "\n";
  }
  util::write_file_atomic(path, out);
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::string content = util::read_file(path);
  std::vector<nlohmann::json> out;
  std::istringstream stream(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("malformed record at " + path.string() + ":" +
                        std::to_string(line_no) + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("schema_version")) {
      throw SchemaError("record at " + path.string() + ":" + std::to_string(line_no) +
                        " is missing schema_version");
    }
    int version = doc.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw SchemaError("unsupported schema version " + std::to_string(version) + " at " +
                        path.string() + ":" + std::to_string(line_no) + " (supported: " +
                        std::to_string(kSchemaVersion) + ")");
    }
    doc.erase("schema_version");
    out.push_back(std::move(doc));
  }
  return out;
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{
      {"schema_version", m.schema_version},
      {"counts", m.counts},
      {"seeds", m.seeds},
      {"backend_ids", m.backend_ids},
      {"created_at", m.created_at},
      {"params", m.params},
  };
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m.schema_version = j.at("schema_version").get<int>();
  m.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
  m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  m.backend_ids = j.at("backend_ids").get<std::vector<std::string>>();
  m.created_at = j.at("created_at").get<std::string>();
  m.params = j.at("params");
}

DatasetManifest load_or_init_manifest(const std::filesystem::path& dir) {
  auto path = dir / "manifest.json";
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    return DatasetManifest{};
  }
  auto doc = nlohmann::json::parse(util::read_file(path));
  int version = doc.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw SchemaError("unsupported manifest schema version " + std::to_string(version));
  }
  return doc.get<DatasetManifest>();
}

void save_manifest(const std::filesystem::path& dir, const DatasetManifest& manifest) {
  util::write_file_atomic(dir / "manifest.json", nlohmann::json(manifest).dump(2) + "\n");
}

void verify_manifest(const std::filesystem::path& dir, const DatasetManifest& manifest) {
  for (const auto& [file, expected] : manifest.counts) {
    auto records = read_jsonl(dir / file);
    if (records.size() != expected) {
      throw SchemaError("manifest count mismatch for " + file + ": manifest says " +
                        std::to_string(expected) + ", file has " +
                        std::to_string(records.size()));
    }
  }
}

std::size_t CorpusStats::total_timelines() const {
  std::size_t n = 0;
  for (const auto& [_, s] : per_scenario) {
    n += s.timelines;
  }
  return n;
}

std::size_t CorpusStats::total_events() const {
  std::size_t n = 0;
  for (const auto& [_, s] : per_scenario) {
    n += s.events;
  }
  return n;
}

std::size_t CorpusStats::total_artifacts() const {
  std::size_t n = 0;
  for (const auto& [_, s] : per_scenario) {
    n += s.artifacts;
  }
  return n;
}

std::size_t CorpusStats::total_queries() const {
  std::size_t n = 0;
  for (const auto& [_, s] : per_scenario) {
    for (const auto& [__, c] : s.queries_per_task) {
      n += c;
    }
  }
  return n;
}

std::string CorpusStats::to_text() const {
  std::string out = "Corpus statistics\n\n";
  out += "scenario    timelines  events  artifacts";
  for (const auto& task : querygen::all_tasks()) {
    out += "  " + querygen::task_id(task);
  }
  out += "\n";
  for (const auto& [scenario, s] : per_scenario) {
    out += scenario;
    out.append(scenario.size() < 12 ? 12 - scenario.size() : 1, ' ');
    out += std::to_string(s.timelines) + "  " + std::to_string(s.events) + "  " +
           std::to_string(s.artifacts);
    for (const auto& task : querygen::all_tasks()) {
      auto it = s.queries_per_task.find(querygen::task_id(task));
      out += "  " + std::to_string(it == s.queries_per_task.end() ? 0 : it->second);
    }
    out += "\n";
  }
  out += "total       " + std::to_string(total_timelines()) + "  " +
         std::to_string(total_events()) + "  " + std::to_string(total_artifacts()) +
         "  queries " + std::to_string(total_queries()) + "\n";
  return out;
}

nlohmann::json CorpusStats::to_json() const {
  nlohmann::json scenarios = nlohmann::json::object();
  for (const auto& [scenario, s] : per_scenario) {
    scenarios[scenario] = {
        {"timelines", s.timelines},
        {"events", s.events},
        {"artifacts", s.artifacts},
        {"queries_per_task", s.queries_per_task},
    };
  }
  return nlohmann::json{
      {"per_scenario", scenarios},
      {"totals",
       {{"timelines", total_timelines()},
        {"events", total_events()},
        {"artifacts", total_artifacts()},
        {"queries", total_queries()}}},
  };
}

CorpusStats corpus_stats(const std::vector<timeline::Timeline>& timelines,
                         const std::vector<querygen::Query>& queries) {
  CorpusStats stats;
  std::map<std::string, std::string> topic_to_scenario;
  for (const auto& tl : timelines) {
    auto scenario = scenario::scenario_id(tl.topic.scenario);
    auto& s = stats.per_scenario[scenario];
    ++s.timelines;
    s.events += tl.events.size();
    s.artifacts += tl.artifact_log.size();
    topic_to_scenario[tl.topic.id] = scenario;
  }
  for (const auto& q : queries) {
    auto it = topic_to_scenario.find(q.topic_ref);
    std::string scenario =
        it != topic_to_scenario.end()
            ? it->second
            : q.topic_ref.substr(0, q.topic_ref.find('-'));
    ++stats.per_scenario[scenario].queries_per_task[querygen::task_id(q.task)];
  }
  return stats;
}

}  // namespace memsteer::store
