#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memsteer/backend.hpp"
#include "memsteer/querygen.hpp"
#include "memsteer/timeline.hpp"

namespace memsteer::memory {

enum class SourceKind {
  event,
  artifact,
};

struct MemoryItem {
  SourceKind kind = SourceKind::event;
  int event_index = 0;          // producing/created-by event for both kinds
  std::string artifact_type;    // artifact items only
  int artifact_version = 0;     // artifact items only
  std::string summary;
  std::size_t tokens_estimate = 0;

  /// Stable identity used by mask selectors ("event:3" / "artifact:method:2").
  std::string id() const;
};

struct MemoryBundle {
  std::string query_ref;
  std::string profile;
  std::vector<MemoryItem> inter_session;
  std::vector<MemoryItem> intra_session;

  std::vector<MemoryItem> all_items() const;
};

void to_json(nlohmann::json& j, const MemoryItem& m);
void from_json(const nlohmann::json& j, MemoryItem& m);
void to_json(nlohmann::json& j, const MemoryBundle& b);
void from_json(const nlohmann::json& j, MemoryBundle& b);

class Summarizer {
 public:
  virtual ~Summarizer() = default;
  virtual std::string summarize(const std::string& text) = 0;
};

/// Scripted summarizer: identity up to a hard character cap.
class TruncationSummarizer : public Summarizer {
 public:
  explicit TruncationSummarizer(std::size_t max_chars = 160) : max_chars_(max_chars) {}
  std::string summarize(const std::string& text) override;

 private:
  std::size_t max_chars_;
};

/// LLM-backed summarizer via the shared endpoint client.
class BackendSummarizer : public Summarizer {
 public:
  explicit BackendSummarizer(backend::EndpointClient client) : client_(std::move(client)) {}
  std::string summarize(const std::string& text) override;

 private:
  backend::EndpointClient client_;
};

/// Builds the query-specific bundle: candidates are every version of the
/// query's target artifact type created up to e_t, plus the `window` most
/// recent events. Items from events within [t-window+1, t] land in
/// intra_session, the rest in inter_session.
MemoryBundle build_memory(const timeline::Timeline& timeline, const querygen::Query& query,
                          Summarizer& summarizer, int window = 2);

class MaskSelector {
 public:
  virtual ~MaskSelector() = default;
  /// Returns ids of the items to retain, drawn from `items`.
  virtual std::vector<std::string> retain(const std::vector<MemoryItem>& items,
                                          int preference) = 0;
};

/// Built-in deterministic selector: keeps the top ceil(n*(p-1)/4) items
/// ranked by target-type match first, then recency.
class DeterministicMaskSelector : public MaskSelector {
 public:
  explicit DeterministicMaskSelector(std::string target_type)
      : target_type_(std::move(target_type)) {}
  std::vector<std::string> retain(const std::vector<MemoryItem>& items,
                                  int preference) override;

  static std::size_t quota(std::size_t n, int preference);

 private:
  std::string target_type_;
};

/// LLM-backed selector; expects a JSON array of item ids back.
class BackendMaskSelector : public MaskSelector {
 public:
  explicit BackendMaskSelector(backend::EndpointClient client) : client_(std::move(client)) {}
  std::vector<std::string> retain(const std::vector<MemoryItem>& items,
                                  int preference) override;

 private:
  backend::EndpointClient client_;
};

/// Returns a bundle whose item lists are subsets of the input's; the profile
/// is kept verbatim. Selector output naming unknown items raises
/// SelectionError.
MemoryBundle mask_memory(const MemoryBundle& bundle, int preference, MaskSelector& selector);

/// The instruction sheet handed to LLM mask selectors.
std::string masking_prompt();

}  // namespace memsteer::memory
