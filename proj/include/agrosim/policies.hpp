#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "agrosim/env.hpp"

namespace agrosim {

/// What a policy sees at a decision: the day index and every registry value
/// of the first farm (policies are oracles over the full state).
struct PolicyInput {
  int day_index = 0;
  std::span<const double> features;
  std::uint64_t episode_seed = 0;
};

class Policy {
 public:
  Policy(std::string name, nlohmann::json params, ActionSpec spec)
      : name_(std::move(name)), params_(std::move(params)), spec_(spec) {}
  virtual ~Policy() = default;

  /// Pure: the same input always yields the same index.
  virtual int act(const PolicyInput& in) const = 0;

  const std::string& name() const { return name_; }
  const nlohmann::json& params() const { return params_; }
  const ActionSpec& spec() const { return spec_; }

 private:
  std::string name_;
  nlohmann::json params_;
  ActionSpec spec_;
};

/// no_op, random, interval_fert, threshold_irrigate, biweekly_NW, monthly_NW,
/// apply_until_limits, max_everything, fert_only_schedule, irrigate_only_schedule.
const std::vector<std::string>& policy_names();

/// Unknown names and malformed parameters raise ValidationError.
std::unique_ptr<Policy> builtin_policy(const std::string& name, const nlohmann::json& params,
                                       const ActionSpec& spec);

// ---------------------------------------------------------------------------

struct EpisodeResult {
  std::vector<EpisodeLog> farms;         // one log per farm
  std::vector<int> actions;              // index chosen at each decision
  std::vector<double> rewards;           // scalar reward per decision
  std::vector<std::vector<double>> observations;  // reset observation first
  bool terminated = false;
  bool truncated = false;

  double total_reward() const;
};

/// Resets env with `seed` and rolls the policy to the end of the episode.
EpisodeResult run_episode(Env& env, const Policy& policy, std::uint64_t seed);

/// Single-farm convenience: yield-only reward, default mask, no randomization.
EpisodeLog run_episode(const ResolvedConfig& cfg, const Policy& policy, std::uint64_t seed);

/// Runs one episode per seed. The serial and OpenMP variants return identical results.
std::vector<EpisodeLog> run_batch_serial(const ResolvedConfig& cfg, const Policy& policy,
                                         const std::vector<std::uint64_t>& seeds);
std::vector<EpisodeLog> run_batch_parallel(const ResolvedConfig& cfg, const Policy& policy,
                                           const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------

enum class LogFormat { Csv, Jsonl };
LogFormat parse_log_format(const std::string& text);

struct DatasetRequest {
  ResolvedConfig config;
  std::string policy = "random";
  nlohmann::json policy_params = nlohmann::json::object();
  ActionSpec actions;
  RandomizationConfig randomization;
  int n_episodes = 1;
  std::uint64_t seed = 0;
  LogFormat format = LogFormat::Csv;
  bool vary_weather = true;  // synthetic weather reseeded per episode
};

struct ManifestEntry {
  int episode = 0;
  std::uint64_t seed = 0;
  std::string file;
  std::string sha256;
  int n_records = 0;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string policy;
  std::string policy_params;  // JSON text
  std::string format;
  std::string config_file;
  std::string config_sha256;
  std::vector<ManifestEntry> episodes;
};

/// Per-episode log text; the parallel variant distributes episodes over OpenMP threads.
std::vector<std::string> render_episodes_serial(const DatasetRequest& req);
std::vector<std::string> render_episodes_parallel(const DatasetRequest& req);

/// Writes episode_NNNN.{csv,jsonl}, run_config.yaml and manifest.yaml into out_dir.
Manifest generate_dataset(const DatasetRequest& req, const std::filesystem::path& out_dir,
                          bool parallel = true);
std::string manifest_yaml(const Manifest& m);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct Timing {
  double mean = 0.0;
  double std = 0.0;
};

struct TimingStats {
  Timing episode;  // seconds per full episode
  Timing step;     // seconds per env step
  Timing reset;    // seconds per env reset
  int trials = 0;
  int steps_per_episode = 0;
};

/// Times reset, step and whole episodes of a no-op rollout over n_trials.
TimingStats benchmark(const ResolvedConfig& cfg, int n_trials = 100);

}  // namespace agrosim
