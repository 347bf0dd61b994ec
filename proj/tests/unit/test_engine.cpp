#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "agrosim/engine.hpp"
#include "agrosim/random.hpp"
#include "agrosim/text.hpp"
#include "support.hpp"

using namespace agrosim;
using agrosim::testing::agro;

namespace {

struct OracleOut {
  double dvs, tsum;
  std::array<double, 4> w;
  double lai, sm;
  std::array<double, 3> surface, subsoil, uptaken, lost;
  bool runoff;
  double yield_delta;
};

double lerp_table(const std::vector<DvsKnot>& t, double x, std::size_t organ) {
  if (x <= t.front().dvs) return t.front().values[organ];
  if (x >= t.back().dvs) return t.back().values[organ];
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (x <= t[i].dvs) {
      const double a = (x - t[i - 1].dvs) / (t[i].dvs - t[i - 1].dvs);
      return t[i - 1].values[organ] + a * (t[i].values[organ] - t[i - 1].values[organ]);
    }
  }
  return t.back().values[organ];
}

// One growing day of an annual crop written out in a single function.
OracleOut oracle_step(const SimState& s0, const WeatherDay& wx, const ActionAmounts& act,
                      const ResolvedConfig& cfg) {
  const auto& c = cfg.crop;
  const auto& cp = c.canopy;
  const auto& st = cfg.site.params;
  OracleOut o{};
  double sm = s0.soil.sm + act.water / st.root_depth;
  if (sm > st.porosity) sm = st.porosity;
  for (int e = 0; e < 3; ++e) {
    o.surface[e] = s0.soil.surface[e] + act.fertilizer[e];
    o.subsoil[e] = s0.soil.subsoil[e];
    o.uptaken[e] = s0.soil.uptaken[e];
    o.lost[e] = s0.soil.runoff_lost[e];
  }
  const double inc_t = std::max(0.0, wx.t_avg - c.phenology.tbase);
  o.tsum = s0.phenology.tsum + inc_t;
  double d = o.tsum < c.phenology.tsum1 ? o.tsum / c.phenology.tsum1
                                        : 1.0 + (o.tsum - c.phenology.tsum1) / c.phenology.tsum2;
  o.dvs = std::max(s0.phenology.dvs, std::min(2.0, d));

  double W[4];
  for (int k = 0; k < 4; ++k) W[k] = s0.organs.weight[k];
  double resp = 0;
  for (int k = 0; k < 4; ++k) resp += cp.maint[k] * W[k];
  resp *= std::pow(cp.q10, (wx.t_avg - 25.0) / 10.0) * std::min(3.0, 1.0 + cp.a_age * s0.age);
  const double eff = std::max(0.2, 1.0 - cp.b_age * s0.age);
  const double intercept = 1.0 - std::exp(-cp.k_ext * s0.organs.lai);
  const double pot_gross = cp.eps * eff * wx.irradiation * intercept;
  const double veg = 1.0 - lerp_table(cp.part_table, o.dvs, 3);
  const double pot_net = std::max(0.0, pot_gross - resp) * veg;

  double f_water = (sm - st.wilting_point) / (st.sm_crit - st.wilting_point);
  f_water = std::min(1.0, std::max(0.0, f_water));
  double stress = 1.0;
  const auto mode = cfg.agro.limitation_mode;
  if (mode == LimitationMode::W || mode == LimitationMode::LNPKW) stress = std::min(stress, f_water);
  const int n_active = mode == LimitationMode::N ? 1 : mode == LimitationMode::NP ? 2
                       : (mode == LimitationMode::NPK || mode == LimitationMode::LNPKW) ? 3 : 0;
  for (int e = 0; e < n_active; ++e) {
    const double dem = c.demand[e] * pot_net;
    if (dem > 0) stress = std::min(stress, std::min(1.0, st.r_up * o.subsoil[e] / dem));
  }

  const double net = pot_gross * stress - resp;
  const bool excess = o.surface[0] + o.surface[1] + o.surface[2] > st.runoff_surface_threshold;
  double inc[4] = {0, 0, 0, 0};
  if (net > 0) {
    double f[4];
    for (int k = 0; k < 4; ++k) f[k] = lerp_table(cp.part_table, o.dvs, k);
    if (excess) {
      f[1] += f[3] / 4;
      f[2] += f[3] / 4;
      f[3] /= 2;
    }
    for (int k = 0; k < 4; ++k) inc[k] = net * f[k];
  } else if (net < 0) {
    const double from_so = std::min(-net, W[3]);
    inc[3] = -from_so;
    inc[2] = -std::min(-net - from_so, W[2]);
  }
  double growth = 0;
  for (int k = 0; k < 4; ++k) {
    W[k] = std::max(0.0, W[k] + inc[k]);
    if (k != 3 && inc[k] > 0) growth += inc[k];
  }
  for (int k = 0; k < 4; ++k) {
    W[k] *= 1.0 - lerp_table(cp.death_table, o.dvs, k);
    o.w[k] = W[k];
  }
  o.lai = W[2] * cp.sla * 1e-4;
  o.yield_delta = W[3] - s0.organs.weight[3];

  const double water_in = wx.rainfall + act.water;
  o.runoff = excess && water_in > st.runoff_water_threshold;
  for (int e = 0; e < 3; ++e) {
    if (o.runoff) {
      o.lost[e] += st.runoff_loss_frac * o.surface[e];
      o.surface[e] *= 1.0 - st.runoff_loss_frac;
    }
    const double r = water_in > 0 ? st.r_abs_wet : st.r_abs;
    o.subsoil[e] += r * o.surface[e];
    o.surface[e] *= 1.0 - r;
    const double take = std::min(c.demand[e] * growth, st.r_up * o.subsoil[e]);
    o.subsoil[e] -= take;
    o.uptaken[e] += take;
  }

  const double et0 = std::max(0.0, 0.0135 * (wx.t_avg + 17.8) * wx.irradiation / 2.45) / 10.0;
  const double transp = et0 * (1.0 - std::exp(-cp.k_ext * o.lai)) * f_water;
  sm += (wx.rainfall - st.evap_base - transp) / st.root_depth;
  if (sm > st.porosity) sm = st.porosity;
  if (sm > st.field_capacity) sm -= st.perc_rate * (sm - st.field_capacity);
  o.sm = std::max(0.0, sm);
  return o;
}

void expect_rel(double a, double b, const char* what, int day) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  EXPECT_LE(std::abs(a - b) / scale, 1e-12) << what << " day " << day << ": " << a << " vs " << b;
}

EpisodeLog run_fixed(const Engine& eng, const std::vector<ActionAmounts>& actions) {
  EpisodeLog log;
  SimState s = eng.init_simulation();
  std::size_t i = 0;
  while (!s.terminated) {
    const ActionAmounts a = i < actions.size() ? actions[i] : ActionAmounts{};
    auto r = eng.step_day(s, a);
    s = r.state;
    log.records.push_back(std::move(r.record));
    ++i;
  }
  log.final_state = s;
  return log;
}

}  // namespace

TEST(Engine, LeafAreaUsesSlaInHectareUnits) {
  // SLA is m² per kg and leaves are kg/ha, so LAI = SLA·W/10⁴.
  EXPECT_DOUBLE_EQ(leaf_area_index(1000.0, 20.0), 2.0);
}

TEST(Engine, StepMatchesStraightLineOracle) {
  for (const char* mode : {"lnpkw", "potential", "w", "n", "np", "npk"}) {
    const auto cfg = agro("wheat", {{"agro.limitation_mode", mode}});
    const Engine eng(build_scenario(cfg));
    Rng rng(17);
    SimState s = eng.init_simulation();
    int day = 0;
    while (!s.terminated) {
      ActionAmounts a;
      const auto pick = rng.below(6);
      if (pick < 3) a.fertilizer[pick] = 20.0 * static_cast<double>(rng.below(4));
      if (pick == 3) a.water = 2.0 * static_cast<double>(rng.below(4));
      const WeatherDay& wx = eng.scenario().weather.on(s.date);
      const OracleOut o = oracle_step(s, wx, a, cfg);
      const auto r = eng.step_day(s, a);
      const SimState& n = r.state;
      expect_rel(n.phenology.dvs, o.dvs, "dvs", day);
      expect_rel(n.phenology.tsum, o.tsum, "tsum", day);
      for (int k = 0; k < 4; ++k) expect_rel(n.organs.weight[k], o.w[k], "organ", day);
      expect_rel(n.organs.lai, o.lai, "lai", day);
      expect_rel(n.soil.sm, o.sm, "sm", day);
      for (int e = 0; e < 3; ++e) {
        expect_rel(n.soil.surface[e], o.surface[e], "surface", day);
        expect_rel(n.soil.subsoil[e], o.subsoil[e], "subsoil", day);
        expect_rel(n.soil.uptaken[e], o.uptaken[e], "uptaken", day);
        expect_rel(n.soil.runoff_lost[e], o.lost[e], "lost", day);
      }
      EXPECT_EQ(r.record.runoff, o.runoff) << day;
      expect_rel(r.record.yield_delta, o.yield_delta, "yield_delta", day);
      s = n;
      ++day;
    }
    EXPECT_GT(day, 50) << mode;
  }
}

TEST(Engine, InitIsDeterministicAndFileExact) {
  const auto cfg = agro("wheat");
  const Engine a(build_scenario(cfg)), b(build_scenario(cfg));
  EXPECT_EQ(a.init_simulation(), b.init_simulation());
  const auto s = a.init_simulation();
  EXPECT_EQ(s.organs.weight, cfg.crop.initial_weight);
  EXPECT_EQ(s.soil.sm, cfg.site.sm_init);
  EXPECT_EQ(s.soil.subsoil, cfg.site.subsoil_init);
}

TEST(Engine, DarkDayOnlyRespires) {
  const auto cfg = agro("wheat");
  auto wx = build_scenario(cfg)->weather;
  std::vector<WeatherDay> days = wx.days();
  for (auto& d : days) d.irradiation = 0.0;
  const Engine eng(build_scenario(cfg, WeatherSeries(wx.latitude(), wx.longitude(), days)));
  SimState s = eng.init_simulation();
  for (int i = 0; i < 20; ++i) {
    const auto r = eng.step_day(s, {});
    EXPECT_LE(r.record.yield_delta, 0.0);
    EXPECT_LE(r.state.organs.total(), s.organs.total());
    s = r.state;
  }
}

TEST(Engine, MaturityTerminatesAndIsAbsorbing) {
  const auto cfg = agro("wheat");
  const Engine eng(build_scenario(cfg));
  const auto log = run_fixed(eng, {});
  EXPECT_TRUE(log.final_state.terminated);
  EXPECT_EQ(log.final_state.end_reason, EndReason::Maturity);
  EXPECT_EQ(log.final_state.phenology.dvs, 2.0);
  EXPECT_LE(log.records.size(), static_cast<std::size_t>(cfg.agro.max_duration_days));
  EXPECT_THROW(eng.step_day(log.final_state, {}), RuntimeError);
}

TEST(Engine, HorizonTerminatesAnnualWhenMaturityIsOutOfReach) {
  const auto cfg = agro("wheat", {{"agro.max_duration_days", "30"}});
  const auto log = run_fixed(Engine(build_scenario(cfg)), {});
  EXPECT_EQ(log.records.size(), 30u);
  EXPECT_EQ(log.final_state.end_reason, EndReason::Horizon);
}

TEST(Engine, YieldTelescopesAndAliasesWso) {
  for (const char* crop : {"wheat", "jujube"}) {
    const auto cfg = agro(crop, {{"agro.limitation_mode", "potential"}});
    const Engine eng(build_scenario(cfg));
    const auto init = eng.init_simulation();
    const auto log = run_fixed(eng, {});
    const auto wso = FeatureRegistry::instance().require("WSO");
    double sum = 0, harvest = 0;
    for (const auto& r : log.records) {
      sum += r.yield_delta;
      harvest += r.harvest;
    }
    EXPECT_NEAR(yield_of(init) + sum - harvest, yield_of(log.final_state), 1e-6) << crop;
    EXPECT_EQ(log.records.back().features[wso], yield_of(log.final_state));
    EXPECT_EQ(harvest, log.final_state.totals.harvested);
  }
}

TEST(Engine, PerennialCyclesAndAges) {
  const auto cfg = agro("jujube", {{"agro.limitation_mode", "potential"}});
  const Engine eng(build_scenario(cfg));
  const auto log = run_fixed(eng, {});
  const auto& f = log.final_state;
  EXPECT_EQ(log.records.size(), 365u * 3);
  EXPECT_EQ(f.end_reason, EndReason::Horizon);
  EXPECT_GE(f.dormancy_entries, 2);
  EXPECT_EQ(f.age, cfg.crop.initial_age + f.dormancy_releases);
}

TEST(Engine, FertilizerActsNoEarlierThanApplication) {
  const auto cfg = agro("wheat");
  const Engine eng(build_scenario(cfg));
  const auto base = run_fixed(eng, {});
  std::vector<ActionAmounts> acts(40);
  acts[30].fertilizer[kN] = 60.0;
  const auto fert = run_fixed(eng, acts);
  for (int t = 0; t < 30; ++t) EXPECT_EQ(fert.records[t], base.records[t]) << t;
  const auto up = FeatureRegistry::instance().require("NAVAIL_SURFACE");
  EXPECT_GT(fert.records[30].features[up], base.records[30].features[up]);
}

TEST(Engine, PotentialModeIgnoresNutrients) {
  const auto cfg = agro("wheat", {{"agro.limitation_mode", "potential"}});
  const Engine eng(build_scenario(cfg));
  std::vector<ActionAmounts> acts(100);
  for (int t = 0; t < 100; t += 20) acts[t].fertilizer[kP] = 5.0;
  const auto a = run_fixed(eng, {});
  const auto b = run_fixed(eng, acts);
  EXPECT_EQ(yield_of(a.final_state), yield_of(b.final_state));
}

TEST(Engine, StressNeverRaisesYield) {
  const auto pot = run_fixed(Engine(build_scenario(agro("wheat", {{"agro.limitation_mode", "potential"}}))), {});
  const auto lim = run_fixed(Engine(build_scenario(agro("wheat"))), {});
  EXPECT_LE(yield_of(lim.final_state), yield_of(pot.final_state));
}

TEST(Engine, FertilizedBeatsNoOpUnderLimitation) {
  const auto cfg = agro("wheat");
  const Engine eng(build_scenario(cfg));
  std::vector<ActionAmounts> acts(160);
  for (int t = 0; t < 160; t += 7) {
    acts[t].fertilizer[kN] = 20.0;
    acts[t].water = 2.0;
  }
  EXPECT_LT(yield_of(run_fixed(eng, {}).final_state), yield_of(run_fixed(eng, acts).final_state));
}

TEST(Engine, LogsAreDeterministicAndSerializable) {
  const auto cfg = agro("potato");
  std::vector<ActionAmounts> acts(50);
  acts[3].water = 4.0;
  const auto a = run_fixed(Engine(build_scenario(cfg)), acts);
  const auto b = run_fixed(Engine(build_scenario(cfg)), acts);
  std::ostringstream ca, cb, ja;
  write_log_csv(a, ca);
  write_log_csv(b, cb);
  write_log_jsonl(a, ja);
  EXPECT_EQ(ca.str(), cb.str());
  const auto header = ca.str().substr(0, ca.str().find('\n'));
  EXPECT_EQ(split(header, ',').size(), log_columns().size());
  const std::string jl = ja.str();
  EXPECT_EQ(std::count(jl.begin(), jl.end(), '\n'), static_cast<long>(a.records.size()));
}

TEST(FeatureRegistry, NamesAreUniqueAndResolvable) {
  const auto& reg = FeatureRegistry::instance();
  EXPECT_GE(reg.size(), 30u);
  std::set<std::string> seen(reg.names().begin(), reg.names().end());
  EXPECT_EQ(seen.size(), reg.size());
  for (const char* n : {"DVS", "WSO", "LAI", "SM", "TOTN", "TOTP", "TOTK", "TOTIRRIG", "RAIN",
                        "IRRAD", "TEMP", "NAVAIL_SURFACE", "NAVAIL_SUB"}) {
    EXPECT_TRUE(reg.index_of(n).has_value()) << n;
  }
  EXPECT_THROW(reg.require("NOPE"), ValidationError);
}

TEST(Scenario, WeatherMustCoverHorizon) {
  const auto cfg = agro("wheat");
  const auto short_wx = synth_weather(1, 52.0, 2019);
  EXPECT_THROW(build_scenario(cfg, short_wx), ValidationError);
}
