#include "agrosim/soil.hpp"

#include <algorithm>
#include <cmath>

#include "agrosim/error.hpp"

namespace agrosim {

void validate(const SiteParams& p) {
  auto fail = [](const std::string& m) { throw ValidationError("site: " + m); };
  if (!(p.wilting_point >= 0.0 && p.wilting_point < p.sm_crit && p.sm_crit < p.field_capacity &&
        p.field_capacity < p.porosity && p.porosity <= 1.0)) {
    fail("require 0 <= SMW < SMCRIT < SMFC < SM0 <= 1");
  }
  if (!(p.root_depth > 0.0)) fail("RDMAX must be > 0");
  for (double r : {p.r_abs, p.r_abs_wet, p.r_up, p.runoff_loss_frac, p.perc_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) fail("rates and fractions must lie in [0, 1]");
  }
  if (!(p.runoff_surface_threshold >= 0.0) || !(p.runoff_water_threshold >= 0.0)) {
    fail("runoff thresholds must be >= 0");
  }
  if (!(p.evap_base >= 0.0)) fail("EVAP_BASE must be >= 0");
}

SoilState apply_action(const SoilState& soil, const ActionAmounts& a, const SiteParams& site) {
  for (double f : a.fertilizer) {
    if (!(f >= 0.0)) throw ValidationError("fertilizer amounts must be >= 0");
  }
  if (!(a.water >= 0.0)) throw ValidationError("irrigation amount must be >= 0");
  SoilState s = soil;
  for (std::size_t e = 0; e < kNutrientCount; ++e) s.surface[e] += a.fertilizer[e];
  s.sm += a.water / site.root_depth;
  if (s.sm > site.porosity) {
    s.overflow_water += (s.sm - site.porosity) * site.root_depth;
    s.sm = site.porosity;
  }
  return s;
}

SoilState step_soil_water(const SoilState& soil, const WeatherDay& day, double transp_demand,
                          const SiteParams& site) {
  SoilState s = soil;
  s.sm += (day.rainfall - site.evap_base - transp_demand) / site.root_depth;
  if (s.sm > site.porosity) {
    s.overflow_water += (s.sm - site.porosity) * site.root_depth;
    s.sm = site.porosity;
  }
  if (s.sm > site.field_capacity) s.sm -= site.perc_rate * (s.sm - site.field_capacity);
  s.sm = std::max(0.0, s.sm);
  return s;
}

bool surface_excess(const SoilState& soil, const SiteParams& site) {
  return soil.surface_total() > site.runoff_surface_threshold;
}

NutrientStep step_nutrient_layers(const SoilState& soil, const Npk& demand, double water_in,
                                  const SiteParams& site) {
  NutrientStep out;
  out.soil = soil;
  SoilState& s = out.soil;

  out.runoff = surface_excess(s, site) && water_in > site.runoff_water_threshold;
  if (out.runoff) {
    for (std::size_t e = 0; e < kNutrientCount; ++e) {
      const double lost = site.runoff_loss_frac * s.surface[e];
      s.surface[e] -= lost;
      s.runoff_lost[e] += lost;
    }
    s.runoff_days += 1;
  }
  s.runoff_today = out.runoff;

  const double rate = water_in > 0.0 ? site.r_abs_wet : site.r_abs;
  for (std::size_t e = 0; e < kNutrientCount; ++e) {
    const double moved = rate * s.surface[e];
    s.surface[e] -= moved;
    s.subsoil[e] += moved;

    const double take = std::min(std::max(0.0, demand[e]), site.r_up * s.subsoil[e]);
    s.subsoil[e] -= take;
    s.uptaken[e] += take;
    out.uptake[e] = take;
  }
  return out;
}

Npk uptake_capacity(const SoilState& soil, const SiteParams& site) {
  Npk cap{};
  for (std::size_t e = 0; e < kNutrientCount; ++e) cap[e] = site.r_up * soil.subsoil[e];
  return cap;
}

StressFactors stress_factors(const SoilState& soil, const Npk& demand, const SiteParams& site) {
  StressFactors f;
  f.water = std::clamp((soil.sm - site.wilting_point) / (site.sm_crit - site.wilting_point),
                       0.0, 1.0);
  const Npk cap = uptake_capacity(soil, site);
  for (std::size_t e = 0; e < kNutrientCount; ++e) {
    f.nutrient[e] = demand[e] <= 0.0 ? 1.0 : std::clamp(cap[e] / demand[e], 0.0, 1.0);
  }
  return f;
}

std::string_view to_string(LimitationMode m) {
  switch (m) {
    case LimitationMode::Potential: return "potential";
    case LimitationMode::W: return "w";
    case LimitationMode::N: return "n";
    case LimitationMode::NP: return "np";
    case LimitationMode::NPK: return "npk";
    case LimitationMode::LNPKW: return "lnpkw";
  }
  return "?";
}

LimitationMode parse_limitation_mode(std::string_view text) {
  for (auto m : {LimitationMode::Potential, LimitationMode::W, LimitationMode::N,
                 LimitationMode::NP, LimitationMode::NPK, LimitationMode::LNPKW}) {
    if (to_string(m) == text) return m;
  }
  throw ValidationError("unknown limitation_mode '" + std::string(text) +
                        "' (expected potential, w, n, np, npk, lnpkw)");
}

ActiveLimits active_limits(LimitationMode m) {
  ActiveLimits a;
  switch (m) {
    case LimitationMode::Potential: break;
    case LimitationMode::W: a.water = true; break;
    case LimitationMode::N: a.nutrient = {true, false, false}; break;
    case LimitationMode::NP: a.nutrient = {true, true, false}; break;
    case LimitationMode::NPK: a.nutrient = {true, true, true}; break;
    case LimitationMode::LNPKW:
      a.water = true;
      a.nutrient = {true, true, true};
      break;
  }
  return a;
}

double overall_stress(const StressFactors& f, LimitationMode mode) {
  const ActiveLimits a = active_limits(mode);
  double s = 1.0;
  if (a.water) s = std::min(s, f.water);
  for (std::size_t e = 0; e < kNutrientCount; ++e) {
    if (a.nutrient[e]) s = std::min(s, f.nutrient[e]);
  }
  return s;
}

}  // namespace agrosim
