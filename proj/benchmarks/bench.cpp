#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "memsteer/datagen.hpp"
#include "memsteer/judge.hpp"
#include "memsteer/memory.hpp"
#include "memsteer/metrics.hpp"
#include "memsteer/querygen.hpp"
#include "memsteer/scenario.hpp"
#include "memsteer/timeline.hpp"
#include "memsteer/util.hpp"

using namespace memsteer;

namespace {

timeline::Timeline bench_timeline(int target_len) {
  const auto topics = scenario::TopicBank::builtin().for_scenario(
      scenario::ScenarioName::research);
  timeline::ScriptedProposer proposer(
      scenario::builtin(scenario::ScenarioName::research),
      {.target_len = target_len, .invalid_rate = 0.2, .seed = 12});
  timeline::AcceptAllValidator validator;
  return timeline::synthesize_timeline(topics.front(), proposer, validator,
                                       {.max_len = target_len + 4, .max_retries_per_step = 3});
}

void bm_grpo_objective(benchmark::State& state) {
  util::Rng rng(1);
  metrics::GrpoGroup group;
  for (int i = 0; i < 8; ++i) {
    group.rewards.push_back(20.0 * rng.unit() - 10.0);
    group.ratios.push_back(0.5 + rng.unit());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::grpo_clipped_objective(group));
  }
}
BENCHMARK(bm_grpo_objective);

void bm_grpo_advantages(benchmark::State& state) {
  util::Rng rng(2);
  std::vector<double> rewards;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    rewards.push_back(20.0 * rng.unit() - 10.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::grpo_advantages(rewards));
  }
}
BENCHMARK(bm_grpo_advantages)->Arg(4)->Arg(16)->Arg(64);

void bm_confusion_matrix(benchmark::State& state) {
  util::Rng rng(3);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 500; ++i) {
    pairs.emplace_back(rng.range(1, 5), rng.range(1, 5));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::ConfusionMatrix::from_pairs(pairs));
  }
}
BENCHMARK(bm_confusion_matrix);

void bm_timeline_synthesis(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(bench_timeline(static_cast<int>(state.range(0))));
  }
}
BENCHMARK(bm_timeline_synthesis)->Arg(8)->Arg(16);

void bm_build_memory(benchmark::State& state) {
  auto tl = bench_timeline(12);
  auto queries = querygen::sample_queries(tl, 4, querygen::TemplateBank::builtin(), 5);
  memory::TruncationSummarizer summarizer;
  for (auto _ : state) {
    benchmark::DoNotOptimize(memory::build_memory(tl, queries.front(), summarizer, 2));
  }
}
BENCHMARK(bm_build_memory);

void bm_mask_memory(benchmark::State& state) {
  auto tl = bench_timeline(12);
  auto queries = querygen::sample_queries(tl, 4, querygen::TemplateBank::builtin(), 5);
  memory::TruncationSummarizer summarizer;
  auto bundle = memory::build_memory(tl, queries.front(), summarizer, 3);
  memory::DeterministicMaskSelector selector(queries.front().target_type);
  for (auto _ : state) {
    benchmark::DoNotOptimize(memory::mask_memory(bundle, 3, selector));
  }
}
BENCHMARK(bm_mask_memory);

void bm_heuristic_judge(benchmark::State& state) {
  auto tl = bench_timeline(12);
  auto queries = querygen::sample_queries(tl, 4, querygen::TemplateBank::builtin(), 5);
  memory::TruncationSummarizer summarizer;
  auto bundle = memory::build_memory(tl, queries.front(), summarizer, 2);
  datagen::BuiltinPolicy policy("bench", 9, false);
  judge::Response response;
  response.text = policy.generate_text(3, bundle, queries.front().target_type, 21);
  judge::HeuristicJudge hj;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        judge::score_memory_dependence(response, queries.front(), bundle, hj));
  }
}
BENCHMARK(bm_heuristic_judge);

void bm_steered_generation(benchmark::State& state) {
  auto tl = bench_timeline(12);
  auto queries = querygen::sample_queries(tl, 4, querygen::TemplateBank::builtin(), 5);
  memory::TruncationSummarizer summarizer;
  auto bundle = memory::build_memory(tl, queries.front(), summarizer, 2);
  datagen::BuiltinPolicy policy("bench", 9, false);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        policy.generate_text(4, bundle, queries.front().target_type, ++seed));
  }
}
BENCHMARK(bm_steered_generation);

}  // namespace

BENCHMARK_MAIN();
