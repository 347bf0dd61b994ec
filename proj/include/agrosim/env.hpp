#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agrosim/engine.hpp"
#include "agrosim/random.hpp"

namespace agrosim {

enum class Channel { N = 0, P = 1, K = 2, Water = 3 };
const char* to_string(Channel c);

/// Discrete action set: n fertilizer levels per N/P/K channel, m irrigation levels.
/// Levels run 0..n-1, so the set has exactly 3n + m entries.
struct ActionSpec {
  double f = 20.0;  // kg/ha per fertilizer level
  int n = 4;
  double i = 2.0;   // cm per irrigation level
  int m = 4;

  int count() const { return 3 * n + m; }
  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

void validate(const ActionSpec& spec);

struct DecodedAction {
  Channel channel = Channel::N;
  int level = 0;
  double amount = 0.0;
};

DecodedAction decode_action(const ActionSpec& spec, int index);
int encode_action(const ActionSpec& spec, Channel channel, int level);
ActionAmounts to_amounts(const DecodedAction& a);

/// Ordered subset of the feature registry exposed to the agent.
struct ObservationMask {
  std::vector<std::string> names;
  friend bool operator==(const ObservationMask&, const ObservationMask&) = default;
};

void validate(const ObservationMask& mask);
std::vector<std::size_t> mask_indices(const ObservationMask& mask);
std::vector<double> apply_mask(const std::vector<std::size_t>& indices,
                               const std::vector<double>& features);

/// Development stage, storage weight, NPK and water totals, soil moisture,
/// subsoil NPK, irradiation, temperature and rainfall.
ObservationMask default_observation_mask();
/// Storage weight, development stage, LAI, soil moisture, rain, irradiation, temperature.
ObservationMask compact_observation_mask();

struct RewardConfig {
  enum class Kind { YieldOnly, CostPenalized, Threshold, RunoffPenalty };
  Kind kind = Kind::YieldOnly;
  double cost = 0.0;           // CostPenalized: reward per kg/ha or cm applied
  double fert_limit = 80.0;    // Threshold: kg/ha summed over N, P, K
  double irrig_limit = 40.0;   // Threshold: cm
  double penalty = 1e4;        // Threshold: per violating step; RunoffPenalty: per runoff day

  static RewardConfig yield_only() { return {}; }
  static RewardConfig cost_penalized(double c);
  static RewardConfig threshold(double fert_limit = 80.0, double irrig_limit = 40.0,
                                double penalty = 1e4);
  static RewardConfig runoff_penalty(double penalty = 1e4);

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

void validate(const RewardConfig& r);
const char* to_string(RewardConfig::Kind k);
RewardConfig::Kind parse_reward_kind(const std::string& text);

/// What happened to one farm over one decision interval.
struct IntervalOutcome {
  ActionAmounts action;
  double yield_delta = 0.0;
  int runoff_days = 0;
  Totals totals_after;
};

double compute_reward(const RewardConfig& cfg, const IntervalOutcome& outcome);
bool threshold_violated(const RewardConfig& cfg, const IntervalOutcome& outcome);

struct CropSite {
  std::string crop;
  std::string variety = "default";
  std::string site;
  std::string variation = "default";
  friend bool operator==(const CropSite&, const CropSite&) = default;
};

struct RandomizationConfig {
  double param_noise = 0.0;             // relative half-width of uniform noise
  std::vector<std::string> noise_params;  // dotted paths, e.g. crop.EPS
  std::vector<CropSite> crop_site_pool;
  std::vector<int> weather_years;

  bool enabled() const {
    return param_noise > 0.0 || !crop_site_pool.empty() || !weather_years.empty();
  }
  friend bool operator==(const RandomizationConfig&, const RandomizationConfig&) = default;
};

void validate(const RandomizationConfig& r);
std::vector<std::string> default_noise_params();

/// Draws one randomized bundle; base is returned unchanged when randomization is off.
ResolvedConfig randomize(const ResolvedConfig& base, const RandomizationConfig& r, Rng& rng);

/// `{annual|perennial}-{limitation}-{single|multi}`.
std::string env_id(bool perennial, LimitationMode mode, bool multi);
std::string env_id(const ResolvedConfig& cfg, int n_farms);
std::vector<std::string> list_env_ids();

struct EnvIdParts {
  bool perennial = false;
  LimitationMode mode = LimitationMode::LNPKW;
  bool multi = false;
};
EnvIdParts parse_env_id(const std::string& id);

struct EnvOptions {
  RewardConfig reward;
  ObservationMask mask = default_observation_mask();
  ActionSpec actions;
  RandomizationConfig randomization;
  std::uint64_t seed = 0;
};

struct StepOutcome {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  nlohmann::ordered_json info;
};

/// Sequential decision environment over one or more farms sharing the weather
/// of the first farm. One action index is applied to every farm.
class Env {
 public:
  Env(ResolvedConfig config, EnvOptions options);
  Env(std::vector<ResolvedConfig> farms, EnvOptions options);

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt);
  StepOutcome step(int action_index);

  std::size_t n_farms() const { return base_.size(); }
  std::size_t observation_size() const { return indices_.size() * base_.size(); }
  int action_count() const { return options_.actions.count(); }
  const EnvOptions& options() const { return options_; }
  std::string id() const;

  bool done() const { return done_; }
  bool started() const { return !engines_.empty(); }
  const SimState& state(std::size_t farm) const { return states_.at(farm); }
  const Engine& engine(std::size_t farm) const { return engines_.at(farm); }
  const EpisodeLog& log(std::size_t farm) const { return logs_.at(farm); }
  /// Bundle drawn at the last reset, suitable for dump_run_config and exact replay.
  const ResolvedConfig& current_config(std::size_t farm) const;
  /// Full registry values of one farm's current state.
  std::vector<double> features(std::size_t farm) const;
  std::vector<double> observation() const;

 private:
  std::vector<ResolvedConfig> base_;
  EnvOptions options_;
  std::vector<std::size_t> indices_;
  Rng rng_;
  std::vector<Engine> engines_;
  std::vector<SimState> states_;
  std::vector<EpisodeLog> logs_;
  bool done_ = false;
};

}  // namespace agrosim
