#include "agrosim/policies.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>

namespace agrosim {

double EpisodeResult::total_reward() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

EpisodeResult run_episode(Env& env, const Policy& policy, std::uint64_t seed) {
  if (!(policy.spec() == env.options().actions)) {
    throw ValidationError("policy action spec differs from the environment's");
  }
  EpisodeResult res;
  res.observations.push_back(env.reset(seed));
  while (!env.done()) {
    const auto features = env.features(0);
    const PolicyInput in{env.state(0).day_index, features, seed};
    const int a = policy.act(in);
    StepOutcome out = env.step(a);
    res.actions.push_back(a);
    res.rewards.push_back(out.reward);
    res.observations.push_back(std::move(out.observation));
    res.terminated = out.terminated;
    res.truncated = out.truncated;
  }
  for (std::size_t f = 0; f < env.n_farms(); ++f) res.farms.push_back(env.log(f));
  return res;
}

EpisodeLog run_episode(const ResolvedConfig& cfg, const Policy& policy, std::uint64_t seed) {
  EnvOptions opt;
  opt.actions = policy.spec();
  opt.seed = seed;
  Env env(cfg, opt);
  return std::move(run_episode(env, policy, seed).farms.front());
}

std::vector<EpisodeLog> run_batch_serial(const ResolvedConfig& cfg, const Policy& policy,
                                         const std::vector<std::uint64_t>& seeds) {
  std::vector<EpisodeLog> out;
  out.reserve(seeds.size());
  for (auto s : seeds) out.push_back(run_episode(cfg, policy, s));
  return out;
}

std::vector<EpisodeLog> run_batch_parallel(const ResolvedConfig& cfg, const Policy& policy,
                                           const std::vector<std::uint64_t>& seeds) {
  std::vector<EpisodeLog> out(seeds.size());
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run_episode(cfg, policy, seeds[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(agrosim_batch_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {

Timing summarize(const std::vector<double>& xs) {
  Timing t;
  if (xs.empty()) return t;
  t.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - t.mean) * (x - t.mean);
  t.std = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return t;
}

}  // namespace

TimingStats benchmark(const ResolvedConfig& cfg, int n_trials) {
  if (n_trials < 1) throw ValidationError("benchmark needs at least one trial");
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };

  EnvOptions opt;
  Env env(cfg, opt);
  const auto policy = builtin_policy("no_op", nullptr, opt.actions);
  std::vector<double> episodes, steps, resets;
  TimingStats stats;
  stats.trials = n_trials;
  for (int t = 0; t < n_trials; ++t) {
    const auto t0 = clock::now();
    env.reset(static_cast<std::uint64_t>(t));
    const auto t1 = clock::now();
    resets.push_back(seconds(t1 - t0));
    int n_steps = 0;
    while (!env.done()) {
      const auto features = env.features(0);
      const int a = policy->act({env.state(0).day_index, features, 0});
      const auto s0 = clock::now();
      env.step(a);
      steps.push_back(seconds(clock::now() - s0));
      ++n_steps;
    }
    episodes.push_back(seconds(clock::now() - t0));
    stats.steps_per_episode = n_steps;
  }
  stats.episode = summarize(episodes);
  stats.step = summarize(steps);
  stats.reset = summarize(resets);
  return stats;
}

}  // namespace agrosim
