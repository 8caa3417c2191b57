#include "memsteer/backend.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "memsteer/errors.hpp"
#include "memsteer/util.hpp"

#include <httplib.h>

namespace memsteer::backend {

std::string role_id(Role role) {
  switch (role) {
    case Role::proposer:
      return "proposer";
    case Role::validator:
      return "validator";
    case Role::summarizer:
      return "summarizer";
    case Role::simulator:
      return "simulator";
    case Role::policy:
      return "policy";
    case Role::judge:
      return "judge";
    case Role::scorer:
      return "scorer";
  }
  throw ContractError("unknown backend role");
}

std::string BackendRequest::canonical_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"speaker", m.speaker}, {"text", m.text}});
  }
  nlohmann::json doc{
      {"role", role_id(role)},
      {"messages", msgs},
      {"params",
       {{"temperature", params.temperature},
        {"max_output", params.max_output},
        {"seed", params.seed}}},
  };
  // nlohmann objects iterate in key order, so this dump is canonical.
  return doc.dump();
}

std::string BackendRequest::canonical_hash() const {
  std::string body = canonical_json();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(body.data(), body.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

BackendConfig BackendConfig::from_env_and_file(const std::string& config_path) {
  BackendConfig cfg;
  if (!config_path.empty()) {
    auto doc = nlohmann::json::parse(util::read_file(config_path));
    cfg.base_url = doc.value("base_url", "");
    cfg.model = doc.value("model", "");
    cfg.api_key_env = doc.value("api_key_env", "");
    cfg.fixture_dir = doc.value("fixture_dir", "");
    cfg.cache_dir = doc.value("cache_dir", "");
    cfg.max_retries = doc.value("max_retries", 3);
    cfg.timeout_seconds = doc.value("timeout_seconds", 60);
  }
  if (const char* v = std::getenv("MEMSTEER_BASE_URL")) {
    cfg.base_url = v;
  }
  if (const char* v = std::getenv("MEMSTEER_MODEL")) {
    cfg.model = v;
  }
  if (const char* v = std::getenv("MEMSTEER_API_KEY_ENV")) {
    cfg.api_key_env = v;
  }
  return cfg;
}

void Budget::charge(std::size_t calls, std::size_t tokens) {
  std::lock_guard<std::mutex> lock(mu_);
  if (calls_ + calls > max_calls_) {
    throw BudgetError("call budget exceeded: " + std::to_string(calls_ + calls) + " > " +
                      std::to_string(max_calls_));
  }
  if (tokens_ + tokens > max_tokens_) {
    throw BudgetError("token budget exceeded: " + std::to_string(tokens_ + tokens) + " > " +
                      std::to_string(max_tokens_));
  }
  calls_ += calls;
  tokens_ += tokens;
}

std::size_t Budget::calls_used() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::size_t Budget::tokens_used() const {
  std::lock_guard<std::mutex> lock(mu_);
  return tokens_;
}

std::optional<nlohmann::json> Cache::get(const std::string& hash) const {
  auto path = dir_ / (hash + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    return std::nullopt;
  }
  return nlohmann::json::parse(util::read_file(path));
}

void Cache::put(const std::string& hash, const nlohmann::json& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  util::write_file_atomic(dir_ / (hash + ".json"), payload.dump(2));
}

namespace {

BackendResponse response_from_payload(const nlohmann::json& payload, bool from_cache) {
  BackendResponse out;
  out.from_cache = from_cache;
  if (payload.contains("text")) {
    out.text = payload.at("text").get<std::string>();
  }
  if (payload.contains("scalar") && !payload.at("scalar").is_null()) {
    out.scalar = payload.at("scalar").get<double>();
  }
  if (payload.contains("usage")) {
    const auto& u = payload.at("usage");
    out.prompt_tokens = u.value("prompt_tokens", 0u);
    out.completion_tokens = u.value("completion_tokens", 0u);
  }
  return out;
}

nlohmann::json payload_from_response(const BackendResponse& resp) {
  nlohmann::json payload{
      {"text", resp.text},
      {"usage",
       {{"prompt_tokens", resp.prompt_tokens}, {"completion_tokens", resp.completion_tokens}}},
  };
  if (resp.scalar) {
    payload["scalar"] = *resp.scalar;
  } else {
    payload["scalar"] = nullptr;
  }
  return payload;
}

std::size_t request_token_estimate(const BackendRequest& request) {
  std::size_t total = 0;
  for (const auto& m : request.messages) {
    total += util::estimate_tokens(m.text);
  }
  return total + static_cast<std::size_t>(request.params.max_output);
}

BackendResponse http_call_once(const BackendRequest& request, const BackendConfig& config) {
  httplib::Client client(config.base_url);
  client.set_read_timeout(config.timeout_seconds, 0);
  client.set_connection_timeout(config.timeout_seconds, 0);

  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  if (request.role == Role::scorer) {
    std::string text = request.messages.empty() ? "" : request.messages.back().text;
    nlohmann::json body{{"model", config.model}, {"text", text}};
    auto res = client.Post("/v1/score", headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
      throw TransportError("score endpoint failed: " +
                           (res ? "HTTP " + std::to_string(res->status)
                                : httplib::to_string(res.error())));
    }
    auto doc = nlohmann::json::parse(res->body);
    BackendResponse out;
    out.scalar = doc.at("score").get<double>();
    out.text = res->body;
    return out;
  }

  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : request.messages) {
    msgs.push_back({{"role", m.speaker}, {"content", m.text}});
  }
  nlohmann::json body{
      {"model", config.model},
      {"messages", msgs},
      {"temperature", request.params.temperature},
      {"max_tokens", request.params.max_output},
      {"seed", request.params.seed},
  };
  auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw TransportError("chat endpoint failed: " +
                         (res ? "HTTP " + std::to_string(res->status)
                              : httplib::to_string(res.error())));
  }
  auto doc = nlohmann::json::parse(res->body);
  BackendResponse out;
  out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
  if (doc.contains("usage")) {
    out.prompt_tokens = doc["usage"].value("prompt_tokens", 0u);
    out.completion_tokens = doc["usage"].value("completion_tokens", 0u);
  }
  return out;
}

}  // namespace

BackendResponse complete(const BackendRequest& request, const BackendConfig& config,
                         Budget* budget) {
  std::string hash = request.canonical_hash();

  std::optional<Cache> cache;
  if (!config.cache_dir.empty()) {
    cache.emplace(config.cache_dir);
    if (auto hit = cache->get(hash)) {
      return response_from_payload(*hit, true);
    }
  }

  if (!config.fixture_dir.empty()) {
    auto path = std::filesystem::path(config.fixture_dir) / (hash + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      throw FixtureMissError("no fixture entry for request hash " + hash);
    }
    auto resp = response_from_payload(nlohmann::json::parse(util::read_file(path)), false);
    if (cache) {
      cache->put(hash, payload_from_response(resp));
    }
    return resp;
  }

  if (config.base_url.empty()) {
    throw ConfigError("backend has neither base_url nor fixture_dir configured");
  }

  if (budget) {
    budget->charge(1, request_token_estimate(request));
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = std::chrono::milliseconds(config.backoff_initial_ms << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
    try {
      auto resp = http_call_once(request, config);
      if (cache) {
        cache->put(hash, payload_from_response(resp));
      }
      return resp;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("backend call failed after " + std::to_string(config.max_retries + 1) +
                       " attempts: " + last_error);
}

std::string EndpointClient::chat(Role role, const std::vector<Message>& messages,
                                 const Params& params) const {
  BackendRequest req{role, messages, params};
  return complete(req, config_, budget_).text;
}

double EndpointClient::score(const std::string& text, const Params& params) const {
  BackendRequest req{Role::scorer, {{"user", text}}, params};
  auto resp = complete(req, config_, budget_);
  if (!resp.scalar) {
    throw TransportError("scorer backend returned no scalar");
  }
  return *resp.scalar;
}

void write_fixture(const std::filesystem::path& dir, const BackendRequest& request,
                   const nlohmann::json& payload) {
  util::write_file_atomic(dir / (request.canonical_hash() + ".json"), payload.dump(2));
}

}  // namespace memsteer::backend
