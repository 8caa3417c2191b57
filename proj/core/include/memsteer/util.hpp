#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace memsteer::util {

/// FNV-1a over bytes; stable across platforms, used for seed derivation and
/// cheap content fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

/// Derives a child seed for a named stream so sibling stages draw from
/// independent sequences even when they share a root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

/// Thin deterministic wrapper around mt19937_64. Bounded draws use modulo on
/// purpose: the tiny bias is irrelevant here and the results stay reproducible
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, n). n must be > 0.
  std::size_t below(std::size_t n);

  /// Uniform in [lo, hi] inclusive.
  int range(int lo, int hi);

  /// Uniform in [0, 1).
  double unit();

  /// Bernoulli with probability p.
  bool chance(double p) { return unit() < p; }

  /// Picks one element index by weight. Weights must be non-negative with a
  /// positive sum.
  std::size_t weighted(const std::vector<double>& weights);

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Compensated accumulator for long sums of doubles.
class KahanSum {
 public:
  void add(double x);
  double value() const { return sum_; }
  std::size_t count() const { return count_; }
  double mean() const;

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t count_ = 0;
};

/// Reduced fraction with 64-bit terms. Keeps win-rate style tallies exact so
/// that rates over a partition sum to exactly one.
class Ratio {
 public:
  Ratio() = default;
  Ratio(std::int64_t num, std::int64_t den);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  Ratio operator+(const Ratio& other) const;
  bool operator==(const Ratio& other) const = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Lowercased alphanumeric tokens of length >= 3, minus a small stopword
/// list. This is the shared vocabulary for overlap scoring.
std::vector<std::string> content_words(std::string_view text);

/// Jaccard similarity of the content-word sets of two texts. Empty/empty is 0.
double jaccard(std::string_view a, std::string_view b);

/// Crude token estimate used for budget accounting: ceil(len/4), min 1 for
/// non-empty text.
std::size_t estimate_tokens(std::string_view text);

/// Current wall-clock time as an ISO-8601 UTC string (seconds precision).
std::string iso8601_utc_now();

/// Writes via a temp file in the same directory and renames into place, so
/// readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Reads a whole file; throws DependencyError when it does not exist.
std::string read_file(const std::filesystem::path& path);

/// Joins with a separator.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every occurrence of `from` in `text` with `to`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

/// "research_plan" -> "research plan".
std::string prettify(std::string_view type_id);

bool starts_with(std::string_view text, std::string_view prefix);
bool contains(std::string_view text, std::string_view needle);
std::string lower(std::string_view text);

}  // namespace memsteer::util
