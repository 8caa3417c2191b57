#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "memsteer/errors.hpp"
#include "memsteer/util.hpp"

using namespace memsteer;

TEST_CASE("fnv1a64 matches the reference vectors") {
  CHECK(util::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(util::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(util::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("derive_seed separates named streams") {
  auto a = util::derive_seed(7, "alpha");
  auto b = util::derive_seed(7, "beta");
  auto c = util::derive_seed(8, "alpha");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a == util::derive_seed(7, "alpha"));
}

TEST_CASE("rng draws are deterministic and in range") {
  util::Rng r1(42), r2(42);
  for (int i = 0; i < 1000; ++i) {
    auto x = r1.below(17);
    CHECK(x == r2.below(17));
    CHECK(x < 17);
  }
  util::Rng r3(7);
  for (int i = 0; i < 1000; ++i) {
    int v = r3.range(-3, 4);
    CHECK(v >= -3);
    CHECK(v <= 4);
    double u = r3.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng shuffle permutes without losing elements") {
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto sorted = v;
  util::Rng rng(3);
  rng.shuffle(v);
  auto shuffled = v;
  std::sort(v.begin(), v.end());
  CHECK(v == sorted);
  util::Rng rng2(3);
  auto w = sorted;
  rng2.shuffle(w);
  CHECK(w == shuffled);
}

TEST_CASE("weighted draw respects zero weights") {
  util::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    CHECK(rng.weighted({0.0, 1.0, 0.0}) == 1);
  }
  CHECK_THROWS_AS(rng.weighted({0.0, 0.0}), ContractError);
}

TEST_CASE("kahan accumulation stays accurate over long sums") {
  util::KahanSum sum;
  for (int i = 0; i < 1000000; ++i) {
    sum.add(0.1);
  }
  CHECK(sum.value() == doctest::Approx(100000.0).epsilon(1e-12));
  CHECK(sum.count() == 1000000);
  util::KahanSum small;
  small.add(1);
  small.add(2);
  small.add(3);
  CHECK(small.mean() == doctest::Approx(2.0));
  util::KahanSum empty;
  CHECK_THROWS_AS(empty.mean(), ContractError);
}

TEST_CASE("ratios reduce and add exactly") {
  util::Ratio half(2, 4);
  CHECK(half.num() == 1);
  CHECK(half.den() == 2);
  CHECK(util::Ratio(0, 5) == util::Ratio(0, 1));
  CHECK(util::Ratio(1, 3) + util::Ratio(1, 6) == util::Ratio(1, 2));
  CHECK((util::Ratio(1, 4) + util::Ratio(1, 4) + util::Ratio(1, 2)) == util::Ratio(1, 1));
  CHECK(util::Ratio(3, 4).value() == doctest::Approx(0.75));
}

TEST_CASE("content words drop stopwords and short tokens") {
  auto words = util::content_words("The cat AND the dog ran; a plan!");
  std::set<std::string> set(words.begin(), words.end());
  CHECK(set.count("cat") == 1);
  CHECK(set.count("dog") == 1);
  CHECK(set.count("ran") == 1);
  CHECK(set.count("plan") == 1);
  CHECK(set.count("the") == 0);
  CHECK(set.count("and") == 0);
  CHECK(util::content_words("a an to of").empty());
}

TEST_CASE("jaccard overlap on content words") {
  CHECK(util::jaccard("alpha beta gamma", "beta gamma delta") == doctest::Approx(0.5));
  CHECK(util::jaccard("alpha beta", "alpha beta") == doctest::Approx(1.0));
  CHECK(util::jaccard("alpha", "omega") == doctest::Approx(0.0));
  CHECK(util::jaccard("", "") == doctest::Approx(0.0));
}

TEST_CASE("token estimates are quarter-length") {
  CHECK(util::estimate_tokens("") == 0);
  CHECK(util::estimate_tokens("ab") == 1);
  CHECK(util::estimate_tokens("abcdefgh") == 2);
}

TEST_CASE("string helpers") {
  CHECK(util::prettify("research_plan") == "research plan");
  CHECK(util::join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(util::replace_all("x{t}y{t}", "{t}", "Q") == "xQyQ");
  CHECK(util::starts_with("prefix rest", "prefix"));
  CHECK_FALSE(util::starts_with("pre", "prefix"));
  CHECK(util::contains("haystack", "st"));
  CHECK(util::lower("AbC") == "abc");
}

TEST_CASE("atomic file writes round-trip") {
  auto dir = std::filesystem::temp_directory_path() / "memsteer-util-test";
  std::filesystem::remove_all(dir);
  auto path = dir / "nested" / "file.txt";
  util::write_file_atomic(path, "payload\n");
  CHECK(util::read_file(path) == "payload\n");
  CHECK_THROWS_AS(util::read_file(dir / "missing.txt"), DependencyError);
  std::filesystem::remove_all(dir);
}
