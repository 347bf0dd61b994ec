#include <gtest/gtest.h>

#include "agrosim/error.hpp"
#include "agrosim/soil.hpp"

using namespace agrosim;

namespace {

WeatherDay dry_day(double rain = 0.0) {
  WeatherDay w;
  w.t_min = 10;
  w.t_max = 20;
  w.t_avg = 15;
  w.rainfall = rain;
  w.vapor_pressure = 12;
  return w;
}

}  // namespace

TEST(ApplyAction, ZeroIsIdentity) {
  SiteParams site;
  SoilState s;
  s.surface = {3, 2, 1};
  EXPECT_EQ(apply_action(s, ActionAmounts{}, site), s);
}

TEST(ApplyAction, FertilizerAndWaterArithmetic) {
  SiteParams site;
  site.root_depth = 100;
  SoilState s;
  s.sm = 0.25;
  ActionAmounts a;
  a.fertilizer[kN] = 10;
  a.water = 2;
  const auto out = apply_action(s, a, site);
  EXPECT_EQ(out.surface[kN], 10.0);
  EXPECT_NEAR(out.sm, 0.27, 1e-15);
}

TEST(ApplyAction, OverflowClampsAtPorosity) {
  SiteParams site;
  SoilState s;
  s.sm = site.porosity - 0.01;
  ActionAmounts a;
  a.water = 3;
  const auto out = apply_action(s, a, site);
  EXPECT_EQ(out.sm, site.porosity);
  EXPECT_NEAR(out.overflow_water, 2.0, 1e-12);
}

TEST(ApplyAction, RejectsNegativeAmounts) {
  ActionAmounts a;
  a.fertilizer[kP] = -1;
  EXPECT_THROW(apply_action(SoilState{}, a, SiteParams{}), ValidationError);
}

TEST(SoilWater, EvaporationOnlyAtFieldCapacity) {
  SiteParams site;
  SoilState s;
  s.sm = site.field_capacity;
  const auto out = step_soil_water(s, dry_day(), 0.0, site);
  EXPECT_NEAR(out.sm, site.field_capacity - site.evap_base / site.root_depth, 1e-15);
}

TEST(SoilWater, BalancedRainLeavesMoistureUnchanged) {
  SiteParams site;
  SoilState s;
  s.sm = 0.25;
  const auto out = step_soil_water(s, dry_day(site.evap_base + 0.3), 0.3, site);
  EXPECT_NEAR(out.sm, 0.25, 1e-15);
}

TEST(SoilWater, PercolatesAboveFieldCapacityAndFloorsAtZero) {
  SiteParams site;
  SoilState s;
  s.sm = site.field_capacity + 0.05 + site.evap_base / site.root_depth;
  auto out = step_soil_water(s, dry_day(), 0.0, site);
  EXPECT_NEAR(out.sm, site.field_capacity + 0.05 * (1 - site.perc_rate), 1e-12);
  s.sm = 0.001;
  out = step_soil_water(s, dry_day(), 5.0, site);
  EXPECT_EQ(out.sm, 0.0);
  EXPECT_EQ(stress_factors(out, {}, site).water, 0.0);
}

TEST(Nutrients, SurfaceToSubsoilTransfer) {
  SiteParams site;
  site.r_abs = 0.1;
  SoilState s;
  s.surface = {10, 0, 0};
  s.subsoil = {5, 5, 5};
  const auto r = step_nutrient_layers(s, {0, 0, 0}, 0.0, site);
  EXPECT_FALSE(r.runoff);
  EXPECT_NEAR(r.soil.surface[kN], 9.0, 1e-12);
  EXPECT_NEAR(r.soil.subsoil[kN], 6.0, 1e-12);
  EXPECT_EQ(r.uptake, (Npk{0, 0, 0}));
}

TEST(Nutrients, WetDaysAbsorbFaster) {
  SiteParams site;
  SoilState s;
  s.surface = {10, 0, 0};
  const auto r = step_nutrient_layers(s, {0, 0, 0}, 0.1, site);
  EXPECT_NEAR(r.soil.surface[kN], 10 * (1 - site.r_abs_wet), 1e-12);
}

TEST(Nutrients, RunoffLosesFractionBeforeTransfer) {
  SiteParams site;
  SoilState s;
  s.surface = {40, 0, 0};
  const auto r = step_nutrient_layers(s, {0, 0, 0}, site.runoff_water_threshold + 0.1, site);
  EXPECT_TRUE(r.runoff);
  EXPECT_EQ(r.soil.runoff_days, 1);
  const double kept = 40 * (1 - site.runoff_loss_frac);
  EXPECT_NEAR(r.soil.runoff_lost[kN], 40 - kept, 1e-12);
  EXPECT_NEAR(r.soil.surface[kN], kept * (1 - site.r_abs_wet), 1e-12);
  // Water at the threshold itself does not trigger.
  EXPECT_FALSE(step_nutrient_layers(s, {0, 0, 0}, site.runoff_water_threshold, site).runoff);
}

TEST(Nutrients, UptakeCappedBySubsoilRate) {
  SiteParams site;
  SoilState s;
  s.subsoil = {20, 20, 20};
  const auto r = step_nutrient_layers(s, {1.0, 5.0, 0.0}, 0.0, site);
  EXPECT_NEAR(r.uptake[kN], 1.0, 1e-15);
  EXPECT_NEAR(r.uptake[kP], site.r_up * 20, 1e-15);
  EXPECT_EQ(r.uptake[kK], 0.0);
}

TEST(Stress, FactorExamples) {
  SiteParams site;
  SoilState s;
  s.sm = site.sm_crit + 0.01;
  EXPECT_EQ(stress_factors(s, {}, site).water, 1.0);
  s.sm = site.wilting_point;
  EXPECT_EQ(stress_factors(s, {}, site).water, 0.0);
  s.subsoil = {10, 10, 10};
  site.r_up = 0.1;
  const auto f = stress_factors(s, {2.0, 0.0, 0.5}, site);
  EXPECT_NEAR(f.nutrient[kN], 0.5, 1e-15);
  EXPECT_EQ(f.nutrient[kP], 1.0);
  EXPECT_EQ(f.nutrient[kK], 1.0);
}

TEST(Stress, OverallByMode) {
  StressFactors f;
  f.water = 0.3;
  f.nutrient = {0.5, 0.2, 0.1};
  EXPECT_EQ(overall_stress(f, LimitationMode::Potential), 1.0);
  EXPECT_EQ(overall_stress(f, LimitationMode::W), 0.3);
  EXPECT_EQ(overall_stress(f, LimitationMode::N), 0.5);
  EXPECT_EQ(overall_stress(f, LimitationMode::NP), 0.2);
  EXPECT_EQ(overall_stress(f, LimitationMode::NPK), 0.1);
  EXPECT_EQ(overall_stress(f, LimitationMode::LNPKW), 0.1);
  EXPECT_EQ(parse_limitation_mode("np"), LimitationMode::NP);
  EXPECT_THROW(parse_limitation_mode("x"), ValidationError);
}

TEST(SiteParams, Validation) {
  SiteParams p;
  EXPECT_NO_THROW(validate(p));
  p.sm_crit = p.field_capacity;
  EXPECT_THROW(validate(p), ValidationError);
  p = SiteParams{};
  p.r_up = 1.5;
  EXPECT_THROW(validate(p), ValidationError);
}
