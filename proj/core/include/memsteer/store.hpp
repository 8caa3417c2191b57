#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsteer/querygen.hpp"
#include "memsteer/timeline.hpp"

namespace memsteer::store {

inline constexpr int kSchemaVersion = 1;

/// Writes one JSON object per line, stamping each with schema_version.
/// Objects dump with sorted keys, so output bytes are deterministic.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

/// Reads and validates a JSONL file. Malformed lines and schema mismatches
/// are reported with their 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

template <typename T>
void write_records(const std::filesystem::path& path, const std::vector<T>& records) {
  std::vector<nlohmann::json> docs;
  docs.reserve(records.size());
  for (const auto& r : records) {
    docs.push_back(nlohmann::json(r));
  }
  write_jsonl(path, docs);
}

template <typename T>
std::vector<T> read_records(const std::filesystem::path& path) {
  std::vector<T> out;
  for (const auto& doc : read_jsonl(path)) {
    out.push_back(doc.get<T>());
  }
  return out;
}

struct DatasetManifest {
  int schema_version = kSchemaVersion;
  std::map<std::string, std::size_t> counts;  // stage file name -> record count
  std::map<std::string, std::uint64_t> seeds;  // stage name -> seed
  std::vector<std::string> backend_ids;
  std::string created_at;
  nlohmann::json params = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

/// Loads <dir>/manifest.json, or a fresh manifest when absent.
DatasetManifest load_or_init_manifest(const std::filesystem::path& dir);
void save_manifest(const std::filesystem::path& dir, const DatasetManifest& manifest);

/// Checks every counted stage file against its actual record count.
void verify_manifest(const std::filesystem::path& dir, const DatasetManifest& manifest);

struct ScenarioStats {
  std::size_t timelines = 0;
  std::size_t events = 0;
  std::size_t artifacts = 0;
  std::map<std::string, std::size_t> queries_per_task;
};

struct CorpusStats {
  std::map<std::string, ScenarioStats> per_scenario;

  std::size_t total_timelines() const;
  std::size_t total_events() const;
  std::size_t total_artifacts() const;
  std::size_t total_queries() const;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

CorpusStats corpus_stats(const std::vector<timeline::Timeline>& timelines,
                         const std::vector<querygen::Query>& queries);

}  // namespace memsteer::store
