#include <benchmark/benchmark.h>

#include <numeric>

#include "agrosim/calibration.hpp"
#include "agrosim/config.hpp"
#include "agrosim/policies.hpp"
#include "agrosim/random.hpp"

using namespace agrosim;

namespace {

const ResolvedConfig& wheat() {
  static const ResolvedConfig cfg = load_agro_config(data_dir() / "agro" / "wheat.yaml");
  return cfg;
}

std::vector<std::uint64_t> seeds(std::int64_t n) {
  std::vector<std::uint64_t> s(static_cast<std::size_t>(n));
  std::iota(s.begin(), s.end(), 0);
  return s;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto policy = builtin_policy("random", nullptr, ActionSpec{});
  const auto s = seeds(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(wheat(), *policy, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto policy = builtin_policy("random", nullptr, ActionSpec{});
  const auto s = seeds(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_parallel(wheat(), *policy, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

DatasetRequest render_request(std::int64_t n) {
  DatasetRequest req;
  req.config = wheat();
  req.n_episodes = static_cast<int>(n);
  return req;
}

void BM_RenderSerial(benchmark::State& state) {
  const auto req = render_request(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_episodes_serial(req));
}

void BM_RenderParallel(benchmark::State& state) {
  const auto req = render_request(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_episodes_parallel(req));
}

struct Candidates {
  std::vector<double> means, stds;
};

Candidates candidates(std::int64_t n) {
  Rng rng(5);
  Candidates c;
  for (std::int64_t i = 0; i < n; ++i) {
    c.means.push_back(rng.uniform(-1.0, 1.0));
    c.stds.push_back(rng.uniform(0.0, 0.5));
  }
  return c;
}

void BM_EiSerial(benchmark::State& state) {
  const auto c = candidates(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(score_ei_serial(c.means, c.stds, -0.2));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EiParallel(benchmark::State& state) {
  const auto c = candidates(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(score_ei_parallel(c.means, c.stds, -0.2));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderParallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EiSerial)->Arg(1024)->Arg(1 << 16);
BENCHMARK(BM_EiParallel)->Arg(1024)->Arg(1 << 16);

BENCHMARK_MAIN();
