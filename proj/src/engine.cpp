#include "agrosim/engine.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "agrosim/text.hpp"

namespace agrosim {

namespace {

// Hargreaves-type reference evapotranspiration in cm/day.
double reference_et(const WeatherDay& w) {
  const double mm = 0.0135 * (w.t_avg + 17.8) * w.irradiation / 2.45;
  return std::max(0.0, mm) / 10.0;
}

using Accessor = std::function<double(const SimState&, const WeatherDay&, double)>;

struct FeatureDef {
  const char* name;
  Accessor get;
};

const std::vector<FeatureDef>& feature_defs() {
  static const std::vector<FeatureDef> defs = {
      {"DVS", [](const SimState& s, const WeatherDay&, double) { return s.phenology.dvs; }},
      {"TSUM", [](const SimState& s, const WeatherDay&, double) { return s.phenology.tsum; }},
      {"CHILL", [](const SimState& s, const WeatherDay&, double) { return s.phenology.chill; }},
      {"DORMANT", [](const SimState& s, const WeatherDay&, double) { return s.phenology.dormant ? 1.0 : 0.0; }},
      {"DORMDAYS", [](const SimState& s, const WeatherDay&, double) { return double(s.phenology.dormancy_days); }},
      {"AGE", [](const SimState& s, const WeatherDay&, double) { return s.age; }},
      {"WRT", [](const SimState& s, const WeatherDay&, double) { return s.organs.roots(); }},
      {"WST", [](const SimState& s, const WeatherDay&, double) { return s.organs.stems(); }},
      {"WLV", [](const SimState& s, const WeatherDay&, double) { return s.organs.leaves(); }},
      {"WSO", [](const SimState& s, const WeatherDay&, double) { return s.organs.storage(); }},
      {"TWAB", [](const SimState& s, const WeatherDay&, double) { return s.organs.total(); }},
      {"LAI", [](const SimState& s, const WeatherDay&, double) { return s.organs.lai; }},
      {"SM", [](const SimState& s, const WeatherDay&, double) { return s.soil.sm; }},
      {"NAVAIL_SURFACE", [](const SimState& s, const WeatherDay&, double) { return s.soil.surface[kN]; }},
      {"PAVAIL_SURFACE", [](const SimState& s, const WeatherDay&, double) { return s.soil.surface[kP]; }},
      {"KAVAIL_SURFACE", [](const SimState& s, const WeatherDay&, double) { return s.soil.surface[kK]; }},
      {"NAVAIL_SUB", [](const SimState& s, const WeatherDay&, double) { return s.soil.subsoil[kN]; }},
      {"PAVAIL_SUB", [](const SimState& s, const WeatherDay&, double) { return s.soil.subsoil[kP]; }},
      {"KAVAIL_SUB", [](const SimState& s, const WeatherDay&, double) { return s.soil.subsoil[kK]; }},
      {"NUPTAKE_T", [](const SimState& s, const WeatherDay&, double) { return s.soil.uptaken[kN]; }},
      {"PUPTAKE_T", [](const SimState& s, const WeatherDay&, double) { return s.soil.uptaken[kP]; }},
      {"KUPTAKE_T", [](const SimState& s, const WeatherDay&, double) { return s.soil.uptaken[kK]; }},
      {"NLOSS_T", [](const SimState& s, const WeatherDay&, double) { return s.soil.runoff_lost[kN]; }},
      {"PLOSS_T", [](const SimState& s, const WeatherDay&, double) { return s.soil.runoff_lost[kP]; }},
      {"KLOSS_T", [](const SimState& s, const WeatherDay&, double) { return s.soil.runoff_lost[kK]; }},
      {"TOTN", [](const SimState& s, const WeatherDay&, double) { return s.totals.fertilizer[kN]; }},
      {"TOTP", [](const SimState& s, const WeatherDay&, double) { return s.totals.fertilizer[kP]; }},
      {"TOTK", [](const SimState& s, const WeatherDay&, double) { return s.totals.fertilizer[kK]; }},
      {"TOTIRRIG", [](const SimState& s, const WeatherDay&, double) { return s.totals.irrigation; }},
      {"RUNOFF_DAYS", [](const SimState& s, const WeatherDay&, double) { return double(s.soil.runoff_days); }},
      {"HARVESTED", [](const SimState& s, const WeatherDay&, double) { return s.totals.harvested; }},
      {"TMIN", [](const SimState&, const WeatherDay& w, double) { return w.t_min; }},
      {"TMAX", [](const SimState&, const WeatherDay& w, double) { return w.t_max; }},
      {"TEMP", [](const SimState&, const WeatherDay& w, double) { return w.t_avg; }},
      {"IRRAD", [](const SimState&, const WeatherDay& w, double) { return w.irradiation; }},
      {"RAIN", [](const SimState&, const WeatherDay& w, double) { return w.rainfall; }},
      {"WIND", [](const SimState&, const WeatherDay& w, double) { return w.wind; }},
      {"VAP", [](const SimState&, const WeatherDay& w, double) { return w.vapor_pressure; }},
      {"DAYL", [](const SimState&, const WeatherDay& w, double lat) { return day_length(lat, day_of_year(w.date)); }},
  };
  return defs;
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureRegistry::FeatureRegistry() {
  for (const auto& d : feature_defs()) names_.emplace_back(d.name);
}

const FeatureRegistry& FeatureRegistry::instance() {
  static const FeatureRegistry registry;
  return registry;
}

std::optional<std::size_t> FeatureRegistry::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t FeatureRegistry::require(const std::string& name) const {
  const auto idx = index_of(name);
  if (!idx) throw ValidationError("unknown state feature '" + name + "'");
  return *idx;
}

double FeatureRegistry::value(std::size_t index, const SimState& s, const WeatherDay& w,
                              double latitude) const {
  return feature_defs().at(index).get(s, w, latitude);
}

std::vector<double> FeatureRegistry::values(const SimState& s, const WeatherDay& w,
                                            double latitude) const {
  const auto& defs = feature_defs();
  std::vector<double> out(defs.size());
  for (std::size_t i = 0; i < defs.size(); ++i) out[i] = defs[i].get(s, w, latitude);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<Scenario> scenario_frame(const ResolvedConfig& cfg) {
  validate(cfg);
  auto sc = std::make_shared<Scenario>();
  sc->config = cfg;
  sc->start = parse_date(std::to_string(cfg.agro.year) + "-" + cfg.agro.sow_date);
  sc->horizon_days = cfg.crop.perennial() ? 365 * cfg.agro.n_seasons : cfg.agro.max_duration_days;
  return sc;
}

std::chrono::sys_days last_day(const Scenario& sc) {
  return sc.start + std::chrono::days{sc.horizon_days - 1};
}

}  // namespace

std::shared_ptr<const Scenario> build_scenario(const ResolvedConfig& cfg) {
  auto sc = scenario_frame(cfg);
  const auto& agro = cfg.agro;
  if (agro.weather_source == "synthetic") {
    const int first_year = year_of(sc->start);
    const int n_years = year_of(last_day(*sc)) - first_year + 1;
    const auto synth = synth_weather_years(agro.random_seed, agro.latitude, first_year, n_years,
                                           cfg.site.synth);
    sc->weather = WeatherSeries(agro.latitude, agro.longitude, synth.days());
    return sc;
  }
  return build_scenario(cfg, load_weather_table(agro.weather_source));
}

std::shared_ptr<const Scenario> build_scenario(const ResolvedConfig& cfg,
                                               const WeatherSeries& weather) {
  auto sc = scenario_frame(cfg);
  if (!weather.covers(sc->start, last_day(*sc))) {
    throw ValidationError("weather does not cover " + format_date(sc->start) + " .. " +
                          format_date(last_day(*sc)));
  }
  sc->weather = weather;
  return sc;
}

Engine::Engine(std::shared_ptr<const Scenario> scenario) : scenario_(std::move(scenario)) {
  if (!scenario_) throw ValidationError("engine needs a scenario");
}

SimState Engine::init_simulation() const {
  const auto& cfg = scenario_->config;
  SimState s;
  s.date = scenario_->start;
  s.phenology = initial_phenology(cfg.crop.start_dormant);
  s.organs.weight = cfg.crop.initial_weight;
  if (cfg.crop.start_dormant) {
    s.organs.weight[kLeaves] = 0.0;
    s.organs.weight[kStorage] = 0.0;
  }
  s.organs.lai = leaf_area_index(s.organs.leaves(), cfg.crop.canopy.sla);
  s.soil.sm = cfg.site.sm_init;
  s.soil.surface = cfg.site.surface_init;
  s.soil.subsoil = cfg.site.subsoil_init;
  s.age = cfg.crop.initial_age;
  return s;
}

const WeatherDay& Engine::observed_weather(const SimState& sim) const {
  const auto& w = scenario_->weather;
  const auto date = sim.day_index == 0 ? sim.date : sim.date - std::chrono::days{1};
  return w.on(std::clamp(date, w.first_date(), w.last_date()));
}

std::vector<double> Engine::features(const SimState& sim) const {
  return FeatureRegistry::instance().values(sim, observed_weather(sim),
                                            scenario_->config.agro.latitude);
}

StepResult Engine::step_day(const SimState& sim, const ActionAmounts& action) const {
  if (sim.terminated) throw RuntimeError("step after the simulation terminated");
  const auto& cfg = scenario_->config;
  const auto& crop = cfg.crop;
  const auto& site = cfg.site.params;
  const auto& canopy = crop.canopy;
  const WeatherDay& w = scenario_->weather.on(sim.date);

  StepResult out{sim, {}};
  SimState& s = out.state;
  DailyRecord& rec = out.record;
  rec.day_index = sim.day_index;
  rec.date = sim.date;
  rec.action = action;

  s.soil = apply_action(s.soil, action, site);
  for (std::size_t e = 0; e < kNutrientCount; ++e) s.totals.fertilizer[e] += action.fertilizer[e];
  s.totals.irrigation += action.water;

  const double day_len = day_length(cfg.agro.latitude, day_of_year(sim.date));
  const bool was_dormant = s.phenology.dormant;
  s.phenology = step_phenology(s.phenology, crop.phenology, w, day_len);
  const bool entering = !was_dormant && s.phenology.dormant;
  const bool released = was_dormant && !s.phenology.dormant;
  if (released) {
    s.age += 1.0;
    s.dormancy_releases += 1;
    s.organs.weight[kLeaves] += crop.leaf_flush;
    s.organs.lai = leaf_area_index(s.organs.leaves(), canopy.sla);
  }

  const double storage_before = s.organs.storage();
  Npk demand{};
  double transpiration = 0.0;
  double harvest = 0.0;

  if (entering) {
    s.dormancy_entries += 1;
    harvest = apply_death_rates(s.organs, s.phenology.dvs, crop.perennial(), false, canopy).storage();
    s.organs = apply_death_rates(s.organs, s.phenology.dvs, crop.perennial(), true, canopy);
  } else if (!s.phenology.dormant) {
    const double resp = maintenance_respiration(s.organs, w.t_avg, s.age, canopy);
    const double potential_gross = daily_assimilation(s.organs.lai, w.irradiation, 1.0, s.age, canopy);
    // Storage fills by translocation; only vegetative growth draws on the soil.
    const double vegetative = 1.0 - interpolate(canopy.part_table, s.phenology.dvs)[kStorage];
    const double potential_net = std::max(0.0, potential_gross - resp) * vegetative;
    Npk potential_demand{};
    for (std::size_t e = 0; e < kNutrientCount; ++e) {
      potential_demand[e] = crop.demand[e] * potential_net;
    }
    const StressFactors factors = stress_factors(s.soil, potential_demand, site);
    const double stress = overall_stress(factors, cfg.agro.limitation_mode);

    const double gross = daily_assimilation(s.organs.lai, w.irradiation, stress, s.age, canopy);
    const OrganArray inc = partition_growth(gross - resp, s.phenology.dvs,
                                            surface_excess(s.soil, site), s.organs, canopy);
    double new_growth = 0.0;
    for (std::size_t o = 0; o < kOrganCount; ++o) {
      s.organs.weight[o] = std::max(0.0, s.organs.weight[o] + inc[o]);
      if (o != kStorage) new_growth += std::max(0.0, inc[o]);
    }
    s.organs = apply_death_rates(s.organs, s.phenology.dvs, crop.perennial(), false, canopy);
    for (std::size_t e = 0; e < kNutrientCount; ++e) demand[e] = crop.demand[e] * new_growth;

    const double cover = 1.0 - std::exp(-canopy.k_ext * s.organs.lai);
    transpiration = reference_et(w) * cover * factors.water;
  }

  const NutrientStep ns = step_nutrient_layers(s.soil, demand, w.rainfall + action.water, site);
  s.soil = step_soil_water(ns.soil, w, transpiration, site);

  s.totals.harvested += harvest;
  rec.yield_delta = s.organs.storage() - storage_before + harvest;
  rec.harvest = harvest;
  rec.runoff = ns.runoff;
  rec.uptake = ns.uptake;

  s.day_index += 1;
  s.date += std::chrono::days{1};
  if (!crop.perennial() && s.phenology.dvs >= 2.0) {
    s.terminated = true;
    s.end_reason = EndReason::Maturity;
  } else if (s.day_index >= scenario_->horizon_days) {
    s.terminated = true;
    s.end_reason = EndReason::Horizon;
  }
  rec.features = FeatureRegistry::instance().values(s, w, cfg.agro.latitude);
  return out;
}

double yield_of(const SimState& sim) { return sim.organs.storage(); }

// ---------------------------------------------------------------------------

std::vector<std::string> log_columns() {
  std::vector<std::string> cols = {"day_index", "date",        "fert_n",  "fert_p", "fert_k",
                                   "water",     "yield_delta", "harvest", "runoff"};
  const auto& names = FeatureRegistry::instance().names();
  cols.insert(cols.end(), names.begin(), names.end());
  return cols;
}

void write_log_csv(const EpisodeLog& log, std::ostream& out) {
  const auto cols = log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : log.records) {
    out << r.day_index << ',' << format_date(r.date) << ',' << format_double(r.action.fertilizer[kN])
        << ',' << format_double(r.action.fertilizer[kP]) << ','
        << format_double(r.action.fertilizer[kK]) << ',' << format_double(r.action.water) << ','
        << format_double(r.yield_delta) << ',' << format_double(r.harvest) << ','
        << (r.runoff ? 1 : 0);
    for (double v : r.features) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_log_jsonl(const EpisodeLog& log, std::ostream& out) {
  const auto& names = FeatureRegistry::instance().names();
  for (const auto& r : log.records) {
    nlohmann::ordered_json j;
    j["day_index"] = r.day_index;
    j["date"] = format_date(r.date);
    j["fert_n"] = r.action.fertilizer[kN];
    j["fert_p"] = r.action.fertilizer[kP];
    j["fert_k"] = r.action.fertilizer[kK];
    j["water"] = r.action.water;
    j["yield_delta"] = r.yield_delta;
    j["harvest"] = r.harvest;
    j["runoff"] = r.runoff ? 1 : 0;
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = r.features[i];
    out << j.dump() << '\n';
  }
}

}  // namespace agrosim
