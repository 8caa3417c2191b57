#include "memsteer/memory.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "memsteer/errors.hpp"
#include "memsteer/util.hpp"

namespace memsteer::memory {

std::string MemoryItem::id() const {
  if (kind == SourceKind::event) {
    return "event:" + std::to_string(event_index);
  }
  return "artifact:" + artifact_type + ":" + std::to_string(artifact_version);
}

std::vector<MemoryItem> MemoryBundle::all_items() const {
  std::vector<MemoryItem> out = inter_session;
  out.insert(out.end(), intra_session.begin(), intra_session.end());
  return out;
}

namespace {

std::string kind_id(SourceKind kind) {
  return kind == SourceKind::event ? "event" : "artifact";
}

SourceKind kind_from_id(const std::string& id) {
  if (id == "event") {
    return SourceKind::event;
  }
  if (id == "artifact") {
    return SourceKind::artifact;
  }
  throw SchemaError("unknown memory item kind: " + id);
}

}  // namespace

void to_json(nlohmann::json& j, const MemoryItem& m) {
  j = nlohmann::json{
      {"kind", kind_id(m.kind)},
      {"event_index", m.event_index},
      {"artifact_type", m.artifact_type},
      {"artifact_version", m.artifact_version},
      {"summary", m.summary},
      {"tokens_estimate", m.tokens_estimate},
  };
}

void from_json(const nlohmann::json& j, MemoryItem& m) {
  m.kind = kind_from_id(j.at("kind").get<std::string>());
  m.event_index = j.at("event_index").get<int>();
  m.artifact_type = j.at("artifact_type").get<std::string>();
  m.artifact_version = j.at("artifact_version").get<int>();
  m.summary = j.at("summary").get<std::string>();
  m.tokens_estimate = j.at("tokens_estimate").get<std::size_t>();
}

void to_json(nlohmann::json& j, const MemoryBundle& b) {
  j = nlohmann::json{
      {"query_ref", b.query_ref},
      {"profile", b.profile},
      {"inter_session", b.inter_session},
      {"intra_session", b.intra_session},
  };
}

void from_json(const nlohmann::json& j, MemoryBundle& b) {
  b.query_ref = j.at("query_ref").get<std::string>();
  b.profile = j.at("profile").get<std::string>();
  b.inter_session = j.at("inter_session").get<std::vector<MemoryItem>>();
  b.intra_session = j.at("intra_session").get<std::vector<MemoryItem>>();
}

std::string TruncationSummarizer::summarize(const std::string& text) {
  if (text.size() <= max_chars_) {
    return text;
  }
  return text.substr(0, max_chars_);
}

std::string BackendSummarizer::summarize(const std::string& text) {
  return client_.chat(backend::Role::summarizer,
                      {{"system", "Summarize the following record in one concise sentence."},
                       {"user", text}});
}

MemoryBundle build_memory(const timeline::Timeline& timeline, const querygen::Query& query,
                          Summarizer& summarizer, int window) {
  int t = query.event_index;
  if (t < 1 || t > static_cast<int>(timeline.length())) {
    throw ContractError("query event_index out of range: " + std::to_string(t));
  }
  if (window < 1) {
    throw ContractError("window must be >= 1");
  }
  int window_start = t - window + 1;

  MemoryBundle bundle;
  bundle.query_ref = query.id;
  bundle.profile = timeline.topic.title + " — " + scenario::goal_sentence(timeline.topic.scenario);

  struct Candidate {
    MemoryItem item;
    int order_index;  // source event index for sorting
    int order_kind;   // artifacts first at equal index
  };
  std::vector<Candidate> candidates;

  for (const auto& a : timeline.artifact_log) {
    if (a.created_by > t || a.artifact_type != query.target_type) {
      continue;
    }
    MemoryItem item;
    item.kind = SourceKind::artifact;
    item.event_index = a.created_by;
    item.artifact_type = a.artifact_type;
    item.artifact_version = a.version;
    item.summary = summarizer.summarize(a.content);
    item.tokens_estimate = util::estimate_tokens(item.summary);
    candidates.push_back({std::move(item), a.created_by, 0});
  }

  for (const auto& e : timeline.events) {
    if (e.index < window_start || e.index > t) {
      continue;
    }
    MemoryItem item;
    item.kind = SourceKind::event;
    item.event_index = e.index;
    item.summary = summarizer.summarize(e.description);
    item.tokens_estimate = util::estimate_tokens(item.summary);
    candidates.push_back({std::move(item), e.index, 1});
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.order_index != y.order_index) {
      return x.order_index < y.order_index;
    }
    if (x.order_kind != y.order_kind) {
      return x.order_kind < y.order_kind;
    }
    return x.item.id() < y.item.id();
  });

  for (auto& c : candidates) {
    if (c.order_index >= window_start) {
      bundle.intra_session.push_back(std::move(c.item));
    } else {
      bundle.inter_session.push_back(std::move(c.item));
    }
  }
  return bundle;
}

std::size_t DeterministicMaskSelector::quota(std::size_t n, int preference) {
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * (preference - 1) / 4.0));
}

std::vector<std::string> DeterministicMaskSelector::retain(
    const std::vector<MemoryItem>& items, int preference) {
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const MemoryItem& a = items[x];
    const MemoryItem& b = items[y];
    bool a_match = a.kind == SourceKind::artifact && a.artifact_type == target_type_;
    bool b_match = b.kind == SourceKind::artifact && b.artifact_type == target_type_;
    if (a_match != b_match) {
      return a_match;
    }
    if (a.event_index != b.event_index) {
      return a.event_index > b.event_index;
    }
    if (a.artifact_version != b.artifact_version) {
      return a.artifact_version > b.artifact_version;
    }
    return a.id() < b.id();
  });

  std::size_t k = quota(items.size(), preference);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(items[order[i]].id());
  }
  return out;
}

std::string masking_prompt() {
  return "You control how much of an assistant's memory survives for the next "
         "reply. The user's memory-dependence preference is an integer from 1 to 5: "
         "at 1 the assistant should answer from general knowledge alone, at 5 it "
         "should lean fully on its own records. Given the preference and the list "
         "of memory items below (each with a stable id), choose which items to "
         "keep. Keep roughly (preference - 1)/4 of the items, favoring items about "
         "the query's target artifact and the most recent sessions. Reply with a "
         "JSON array of the ids to keep and nothing else.";
}

std::vector<std::string> BackendMaskSelector::retain(const std::vector<MemoryItem>& items,
                                                     int preference) {
  std::string listing;
  for (const auto& item : items) {
    listing += "- " + item.id() + ": " + item.summary + "\n";
  }
  std::string answer = client_.chat(
      backend::Role::simulator,
      {{"system", masking_prompt()},
       {"user", "Preference: " + std::to_string(preference) + "\nItems:\n" + listing}});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(answer);
  } catch (const nlohmann::json::parse_error&) {
    throw SelectionError("mask selector returned non-JSON payload");
  }
  if (!doc.is_array()) {
    throw SelectionError("mask selector payload is not a JSON array");
  }
  return doc.get<std::vector<std::string>>();
}

MemoryBundle mask_memory(const MemoryBundle& bundle, int preference, MaskSelector& selector) {
  if (preference < 1 || preference > 5) {
    throw ContractError("preference must be in 1..5");
  }
  auto items = bundle.all_items();
  auto retained_ids = selector.retain(items, preference);

  std::set<std::string> known;
  for (const auto& item : items) {
    known.insert(item.id());
  }
  std::set<std::string> keep;
  for (const auto& id : retained_ids) {
    if (!known.contains(id)) {
      throw SelectionError("mask selector named an item outside the bundle: " + id);
    }
    keep.insert(id);
  }

  MemoryBundle out;
  out.query_ref = bundle.query_ref;
  out.profile = bundle.profile;
  for (const auto& item : bundle.inter_session) {
    if (keep.contains(item.id())) {
      out.inter_session.push_back(item);
    }
  }
  for (const auto& item : bundle.intra_session) {
    if (keep.contains(item.id())) {
      out.intra_session.push_back(item);
    }
  }
  return out;
}

}  // namespace memsteer::memory
