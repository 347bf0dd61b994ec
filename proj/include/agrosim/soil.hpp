#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "agrosim/weather.hpp"

namespace agrosim {

enum Nutrient : std::size_t { kN = 0, kP = 1, kK = 2 };
inline constexpr std::size_t kNutrientCount = 3;
using Npk = std::array<double, kNutrientCount>;

struct SiteParams {
  double porosity = 0.45;
  double field_capacity = 0.32;
  double wilting_point = 0.12;
  double sm_crit = 0.20;
  double root_depth = 100.0;               // cm
  double r_abs = 0.10;                     // surface → subsoil, 1/day
  double r_abs_wet = 0.25;                 // same, on days with water input
  double r_up = 0.10;                      // max fraction of subsoil taken up per day
  double runoff_surface_threshold = 30.0;  // kg/ha, summed over N, P, K
  double runoff_water_threshold = 0.5;     // cm/day
  double runoff_loss_frac = 0.3;
  double perc_rate = 0.3;                  // 1/day of water above field capacity
  double evap_base = 0.1;                  // cm/day

  friend bool operator==(const SiteParams&, const SiteParams&) = default;
};

void validate(const SiteParams& p);

struct SoilState {
  double sm = 0.3;  // volumetric fraction
  Npk surface{};
  Npk subsoil{};
  Npk uptaken{};      // cumulative
  Npk runoff_lost{};  // cumulative, removed from the system
  double overflow_water = 0.0;  // cumulative cm above porosity
  bool runoff_today = false;
  int runoff_days = 0;

  double surface_total() const { return surface[kN] + surface[kP] + surface[kK]; }

  friend bool operator==(const SoilState&, const SoilState&) = default;
};

struct ActionAmounts {
  Npk fertilizer{};    // kg/ha
  double water = 0.0;  // cm

  bool is_noop() const {
    return fertilizer[0] == 0.0 && fertilizer[1] == 0.0 && fertilizer[2] == 0.0 && water == 0.0;
  }
  double fertilizer_total() const { return fertilizer[0] + fertilizer[1] + fertilizer[2]; }
  friend bool operator==(const ActionAmounts&, const ActionAmounts&) = default;
};

/// Fertilizer lands on the surface pools; water raises moisture over the root zone.
SoilState apply_action(const SoilState& soil, const ActionAmounts& amounts,
                       const SiteParams& site);

/// Bucket water balance for one day.
SoilState step_soil_water(const SoilState& soil, const WeatherDay& day, double transp_demand,
                          const SiteParams& site);

struct NutrientStep {
  SoilState soil;
  Npk uptake{};
  bool runoff = false;
};

/// Runoff check and loss, then surface → subsoil transfer, then root uptake.
NutrientStep step_nutrient_layers(const SoilState& soil, const Npk& demand, double water_in,
                                  const SiteParams& site);

bool surface_excess(const SoilState& soil, const SiteParams& site);

struct StressFactors {
  double water = 1.0;
  Npk nutrient{1.0, 1.0, 1.0};
};

/// Uptake capacity today, kg/ha per element.
Npk uptake_capacity(const SoilState& soil, const SiteParams& site);

StressFactors stress_factors(const SoilState& soil, const Npk& demand, const SiteParams& site);

/// Which stresses act on growth.
enum class LimitationMode { Potential, W, N, NP, NPK, LNPKW };

std::string_view to_string(LimitationMode m);
LimitationMode parse_limitation_mode(std::string_view text);

struct ActiveLimits {
  bool water = false;
  std::array<bool, kNutrientCount> nutrient{};
};
ActiveLimits active_limits(LimitationMode m);

/// Minimum over the factors active under the mode; 1 under Potential.
double overall_stress(const StressFactors& f, LimitationMode mode);

}  // namespace agrosim
