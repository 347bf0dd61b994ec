#pragma once

#include <array>
#include <vector>

#include "agrosim/weather.hpp"

namespace agrosim {

/// Thermal-time development with perennial dormancy.
struct PhenologyParams {
  // Grape stage model parameters (the calibrated set).
  double tbase = 5.0;        // °C, base temperature for thermal time
  double chill_req = 40.0;   // chill units needed before release
  double force_bb = 100.0;   // °C·day to bud break
  double force_bl = 500.0;   // °C·day to bloom
  double force_ve = 1200.0;  // °C·day to veraison
  double dlcrit = 12.0;      // hours, dormancy induced below this day length
  double tchill_max = 7.0;   // °C, upper bound of the chilling window

  // Development and dormancy controls shared with annual crops.
  double tsum1 = 800.0;      // °C·day, emergence to anthesis (dvs 0 → 1)
  double tsum2 = 800.0;      // °C·day, anthesis to maturity (dvs 1 → 2)
  int dorm_min = 60;         // days
  int stag_max = 21;         // consecutive zero-forcing days that force dormancy
  double trelease = 8.0;     // °C, 7-day mean needed for release
  bool perennial = false;

  friend bool operator==(const PhenologyParams&, const PhenologyParams&) = default;
};

/// Throws ValidationError on a broken parameter invariant.
void validate(const PhenologyParams& p);

struct PhenologyState {
  double dvs = 0.0;
  double tsum = 0.0;   // thermal time since season start
  double chill = 0.0;
  bool dormant = false;
  int dormancy_days = 0;
  int stagnation_days = 0;

  // Ring buffer of the last seven daily mean temperatures.
  std::array<double, 7> recent_tavg{};
  int recent_count = 0;
  int recent_pos = 0;

  double recent_mean() const;

  friend bool operator==(const PhenologyState&, const PhenologyState&) = default;
};

/// Fresh growing state (dvs 0) or a freshly induced dormant state.
PhenologyState initial_phenology(bool start_dormant);

/// Development stage as a function of thermal time since season start, capped at 2.
double dvs_from_tsum(double tsum, const PhenologyParams& p);

/// Advances one day.
PhenologyState step_phenology(const PhenologyState& state, const PhenologyParams& params,
                              const WeatherDay& day, double day_len);

enum class GrapeStage { Dormant = 0, BudBreak = 1, Bloom = 2, Veraison = 3 };

const char* to_string(GrapeStage s);

/// Thresholds are inclusive. Non-dormant vines below FORCE_BB still report Dormant.
GrapeStage grape_stage(const PhenologyState& state, const PhenologyParams& params);

/// Day of year on which each stage was first reached; 366 when never reached.
struct StageOnsets {
  int year = 0;
  int bud_break = 366;
  int bloom = 366;
  int veraison = 366;

  int operator[](GrapeStage s) const;
  friend bool operator==(const StageOnsets&, const StageOnsets&) = default;
};

inline constexpr int kOnsetNotReached = 366;

/// Runs phenology continuously over whole calendar years, starting dormant on
/// 1 January of the first year. Onset of a stage is the first day on which
/// grape_stage is at or beyond it.
std::vector<StageOnsets> predict_stage_onsets(const PhenologyParams& params,
                                              const WeatherSeries& series);

}  // namespace agrosim
