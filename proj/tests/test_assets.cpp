#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "memsteer/memory.hpp"
#include "memsteer/rubric.hpp"
#include "memsteer/scenario.hpp"

using namespace memsteer;

namespace {

std::filesystem::path asset_dir() {
  return std::filesystem::path(MEMSTEER_ASSET_DIR);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing asset file: " << path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("scenarios.json carries the built-in type tables") {
  auto doc = nlohmann::json::parse(slurp(asset_dir() / "scenarios.json"));
  REQUIRE(doc.is_object());
  REQUIRE(doc.contains("scenarios"));
  const auto& arr = doc.at("scenarios");
  const auto& builtins = scenario::all_builtin();
  REQUIRE(arr.size() == builtins.size());

  for (const auto& entry : arr) {
    scenario::Scenario parsed = scenario::scenario_from_json(entry);
    const scenario::Scenario& expected = scenario::builtin(parsed.name);
    CHECK(parsed.event_types == expected.event_types);
    CHECK(parsed.artifact_types == expected.artifact_types);
  }
}

TEST_CASE("scenarios.json round-trips through the serializer unchanged") {
  auto doc = nlohmann::json::parse(slurp(asset_dir() / "scenarios.json"));
  for (const auto& entry : doc.at("scenarios")) {
    scenario::Scenario parsed = scenario::scenario_from_json(entry);
    CHECK(scenario::scenario_to_json(parsed) == entry);
  }
}

TEST_CASE("masking_prompt.txt matches the library prompt") {
  CHECK(slurp(asset_dir() / "masking_prompt.txt") == memory::masking_prompt() + "\n");
}

TEST_CASE("rubric.json matches the built-in rubric") {
  auto doc = nlohmann::json::parse(slurp(asset_dir() / "rubric.json"));
  CHECK(doc == rubric::to_json(rubric::builtin()));

  rubric::Rubric parsed = rubric::from_json(doc);
  CHECK(rubric::to_json(parsed) == doc);
  CHECK(parsed.level(1).name == rubric::builtin().level(1).name);
  CHECK(parsed.level(5).descriptor == rubric::builtin().level(5).descriptor);
}
