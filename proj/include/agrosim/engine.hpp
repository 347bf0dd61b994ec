#pragma once

#include <chrono>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agrosim/config.hpp"
#include "agrosim/weather.hpp"

namespace agrosim {

struct Totals {
  Npk fertilizer{};        // kg/ha applied per element
  double irrigation = 0.0; // cm applied
  double harvested = 0.0;  // kg/ha storage removed at dormancy entry

  friend bool operator==(const Totals&, const Totals&) = default;
};

enum class EndReason { None, Maturity, Horizon };

struct SimState {
  int day_index = 0;
  std::chrono::sys_days date{};
  PhenologyState phenology;
  OrganPools organs;
  SoilState soil;
  Totals totals;
  double age = 0.0;  // years
  bool terminated = false;
  EndReason end_reason = EndReason::None;
  int dormancy_entries = 0;
  int dormancy_releases = 0;

  friend bool operator==(const SimState&, const SimState&) = default;
};

/// Resolved configuration plus the weather it runs on. Immutable once built.
struct Scenario {
  ResolvedConfig config;
  WeatherSeries weather;
  std::chrono::sys_days start{};
  int horizon_days = 0;
};

/// Builds weather (synthetic from agro.random_seed, or the configured file)
/// and fixes the start date and horizon. Annual horizon is max_duration_days;
/// perennial horizon is n_seasons × 365 days.
std::shared_ptr<const Scenario> build_scenario(const ResolvedConfig& cfg);

/// Same, driven by an existing series (multi-farm runs share one).
std::shared_ptr<const Scenario> build_scenario(const ResolvedConfig& cfg,
                                               const WeatherSeries& weather);

/// Ordered named scalars over the simulation state and the driving weather.
class FeatureRegistry {
 public:
  static const FeatureRegistry& instance();

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(const std::string& name) const;
  std::size_t require(const std::string& name) const;

  double value(std::size_t index, const SimState& s, const WeatherDay& w, double latitude) const;
  std::vector<double> values(const SimState& s, const WeatherDay& w, double latitude) const;

 private:
  FeatureRegistry();
  std::vector<std::string> names_;
};

struct DailyRecord {
  int day_index = 0;
  std::chrono::sys_days date{};
  ActionAmounts action;
  double yield_delta = 0.0;  // change in storage from growth and death, harvest excluded
  double harvest = 0.0;
  bool runoff = false;
  Npk uptake{};
  std::vector<double> features;  // registry order, after the step

  friend bool operator==(const DailyRecord&, const DailyRecord&) = default;
};

struct StepResult {
  SimState state;
  DailyRecord record;
};

/// Daily crop-soil model over one scenario. Const and shareable across threads.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const Scenario> scenario);

  const Scenario& scenario() const { return *scenario_; }
  const ResolvedConfig& config() const { return scenario_->config; }

  SimState init_simulation() const;

  /// One day: weather → action → phenology → stress → assimilation and
  /// respiration → partition → death → nutrient layers → water → totals.
  StepResult step_day(const SimState& sim, const ActionAmounts& action) const;

  /// Registry values of a state, using the weather of the last simulated day
  /// (the start day before any step).
  std::vector<double> features(const SimState& sim) const;
  const WeatherDay& observed_weather(const SimState& sim) const;

 private:
  std::shared_ptr<const Scenario> scenario_;
};

double yield_of(const SimState& sim);

struct EpisodeLog {
  std::vector<DailyRecord> records;
  SimState final_state;
};

void write_log_csv(const EpisodeLog& log, std::ostream& out);
void write_log_jsonl(const EpisodeLog& log, std::ostream& out);
std::vector<std::string> log_columns();

}  // namespace agrosim
