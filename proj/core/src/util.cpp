#include "memsteer/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "memsteer/errors.hpp"

namespace memsteer::util {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  std::string material = std::to_string(root);
  material.push_back('/');
  material.append(stream);
  return fnv1a64(material);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) {
    throw ContractError("Rng::below requires n > 0");
  }
  return static_cast<std::size_t>(engine_() % n);
}

int Rng::range(int lo, int hi) {
  if (hi < lo) {
    throw ContractError("Rng::range requires lo <= hi");
  }
  auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

double Rng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::weighted(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) {
      throw ContractError("Rng::weighted requires non-negative weights");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw ContractError("Rng::weighted requires a positive weight sum");
  }
  double draw = unit() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (draw < acc) {
      return i;
    }
  }
  return weights.size() - 1;
}

void KahanSum::add(double x) {
  double y = x - comp_;
  double t = sum_ + y;
  comp_ = (t - sum_) - y;
  sum_ = t;
  ++count_;
}

double KahanSum::mean() const {
  if (count_ == 0) {
    throw ContractError("KahanSum::mean of an empty sum");
  }
  return sum_ / static_cast<double>(count_);
}

Ratio::Ratio(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den_ == 0) {
    throw ContractError("Ratio with zero denominator");
  }
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

Ratio Ratio::operator+(const Ratio& other) const {
  std::int64_t g = std::gcd(den_, other.den_);
  std::int64_t scale = other.den_ / g;
  return Ratio(num_ * scale + other.num_ * (den_ / g), den_ * scale);
}

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "and", "are", "but", "for", "had", "has", "her", "his", "its", "not",
      "our", "out", "she", "that", "the", "their", "them", "they", "this",
      "was", "were", "who", "will", "with", "you", "your",
  };
  return words;
}

}  // namespace

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (token.size() >= 3 && !stopwords().contains(token)) {
      out.push_back(token);
    }
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

double jaccard(std::string_view a, std::string_view b) {
  auto wa = content_words(a);
  auto wb = content_words(b);
  std::set<std::string> sa(wa.begin(), wa.end());
  std::set<std::string> sb(wb.begin(), wb.end());
  if (sa.empty() && sb.empty()) {
    return 0.0;
  }
  std::size_t inter = 0;
  for (const auto& w : sa) {
    if (sb.contains(w)) {
      ++inter;
    }
  }
  std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t estimate_tokens(std::string_view text) {
  if (text.empty()) {
    return 0;
  }
  return (text.size() + 3) / 4;
}

std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DependencyError("missing file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) {
      out.append(sep);
    }
    out.append(parts[i]);
  }
  return out;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  if (from.empty()) {
    return text;
  }
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string prettify(std::string_view type_id) {
  std::string out(type_id);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

bool starts_with(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

bool contains(std::string_view text, std::string_view needle) {
  return text.find(needle) != std::string_view::npos;
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace memsteer::util
