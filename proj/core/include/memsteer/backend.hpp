#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memsteer::backend {

enum class Role {
  proposer,
  validator,
  summarizer,
  simulator,
  policy,
  judge,
  scorer,
};

std::string role_id(Role role);

struct Message {
  std::string speaker;  // "system" | "user" | "assistant"
  std::string text;
};

struct Params {
  double temperature = 0.0;
  int max_output = 1024;
  std::uint64_t seed = 0;
};

struct BackendRequest {
  Role role = Role::policy;
  std::vector<Message> messages;
  Params params;

  /// Key-sorted JSON rendering; the digest below is taken over this.
  std::string canonical_json() const;

  /// SHA-256 hex of canonical_json(). Identical logical requests hash
  /// equally regardless of how callers assembled them.
  std::string canonical_hash() const;
};

struct BackendResponse {
  std::string text;
  std::optional<double> scalar;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  bool from_cache = false;
};

struct BackendConfig {
  std::string base_url;         // remote endpoint, e.g. http://host:port
  std::string model;            // model name passed through on the wire
  std::string api_key_env;      // env var holding the credential
  std::string fixture_dir;      // scripted replay directory; takes precedence
  std::string cache_dir;        // content-addressed response cache
  int max_retries = 3;
  int backoff_initial_ms = 100;
  int timeout_seconds = 60;

  /// Reads MEMSTEER_BASE_URL / MEMSTEER_MODEL / MEMSTEER_API_KEY_ENV on top
  /// of an optional JSON config file.
  static BackendConfig from_env_and_file(const std::string& config_path = "");
};

/// Per-run ceilings on live calls and estimated tokens, enforced centrally.
class Budget {
 public:
  Budget() = default;
  Budget(std::size_t max_calls, std::size_t max_tokens)
      : max_calls_(max_calls), max_tokens_(max_tokens) {}

  /// Throws BudgetError when a ceiling would be exceeded.
  void charge(std::size_t calls, std::size_t tokens);

  std::size_t calls_used() const;
  std::size_t tokens_used() const;

 private:
  std::size_t max_calls_ = SIZE_MAX;
  std::size_t max_tokens_ = SIZE_MAX;
  std::size_t calls_ = 0;
  std::size_t tokens_ = 0;
  mutable std::mutex mu_;
};

/// Content-addressed response cache: one JSON file per canonical hash,
/// written atomically so concurrent readers never see partial entries.
class Cache {
 public:
  explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<nlohmann::json> get(const std::string& hash) const;
  void put(const std::string& hash, const nlohmann::json& payload);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

/// Resolves a request against cache, then scripted fixtures, then HTTP with
/// exponential-backoff retries. The budget, when given, is charged for live
/// calls only.
BackendResponse complete(const BackendRequest& request, const BackendConfig& config,
                         Budget* budget = nullptr);

/// Convenience handle bundling config + budget; all higher-level backends
/// (judges, simulators, validators, policies) talk through one of these.
class EndpointClient {
 public:
  EndpointClient(BackendConfig config, Budget* budget = nullptr)
      : config_(std::move(config)), budget_(budget) {}

  std::string chat(Role role, const std::vector<Message>& messages,
                   const Params& params = {}) const;
  double score(const std::string& text, const Params& params = {}) const;

  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  Budget* budget_;
};

/// Writes a fixture entry for `request` so a later scripted run replays it.
void write_fixture(const std::filesystem::path& dir, const BackendRequest& request,
                   const nlohmann::json& payload);

}  // namespace memsteer::backend
