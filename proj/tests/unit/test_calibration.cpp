#include <gtest/gtest.h>

#include <cmath>

#include "agrosim/calibration.hpp"
#include "agrosim/config.hpp"
#include "agrosim/random.hpp"
#include "support.hpp"

using namespace agrosim;
using agrosim::testing::TempDir;
using agrosim::testing::spit;

namespace {

PhenologyDataset synthetic_dataset(const PhenologyParams& truth, int years, const std::string& ref) {
  PhenologyDataset d;
  d.cultivar = "test";
  for (int y = 0; y < years; ++y) {
    PhenologyObservation o;
    o.year = 2001 + y;
    o.weather = ref;
    d.years.push_back(o);
  }
  const auto on = PreparedDataset(d).predict(truth);
  for (std::size_t i = 0; i < on.size(); ++i) {
    d.years[i].bud_break = on[i].bud_break;
    d.years[i].bloom = on[i].bloom;
    d.years[i].veraison = on[i].veraison;
  }
  return d;
}

}  // namespace

TEST(Bo, FindsQuadraticMinimum) {
  const LossFn f = [](std::span<const double> x) { return (x[0] - 0.37) * (x[0] - 0.37); };
  BoOptions opt;
  opt.iters = 50;
  const auto r = bo_minimize(f, {{0.0, 1.0}}, 1, opt);
  EXPECT_LE(std::abs(r.x[0] - 0.37), 0.02);
  EXPECT_EQ(r.losses.size(), 60u);
}

TEST(Bo, ScaledBoundsAndTwoDimensions) {
  const LossFn f = [](std::span<const double> x) {
    return (x[0] - 30) * (x[0] - 30) / 100 + (x[1] + 2) * (x[1] + 2);
  };
  BoOptions opt;
  opt.iters = 80;
  const auto r = bo_minimize(f, {{0.0, 100.0}, {-5.0, 5.0}}, 2, opt);
  EXPECT_NEAR(r.x[0], 30, 2.0);
  EXPECT_NEAR(r.x[1], -2, 0.2);
}

TEST(Bo, ZeroItersReturnsBestInitialPoint) {
  const LossFn f = [](std::span<const double> x) { return std::sin(7 * x[0]) + x[1]; };
  BoOptions opt;
  opt.iters = 0;
  const auto r = bo_minimize(f, {{0.0, 1.0}, {0.0, 1.0}}, 4, opt);
  ASSERT_EQ(r.losses.size(), 10u);
  EXPECT_EQ(r.best, *std::min_element(r.losses.begin(), r.losses.end()));
  EXPECT_EQ(f(r.x), r.best);
}

TEST(Bo, TraceIsBestSoFar) {
  const LossFn f = [](std::span<const double> x) { return std::cos(9 * x[0]) * x[0]; };
  BoOptions opt;
  opt.iters = 40;
  const auto r = bo_minimize(f, {{0.0, 1.0}}, 5, opt);
  double best = INFINITY;
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    best = std::min(best, r.losses[i]);
    EXPECT_EQ(r.trace[i], best);
    if (i) {
      EXPECT_LE(r.trace[i], r.trace[i - 1]);
    }
  }
  EXPECT_EQ(r.best, r.trace.back());
}

TEST(Bo, NonFiniteLossesRecordedAsInfinity) {
  const LossFn f = [](std::span<const double> x) {
    return x[0] < 0.5 ? std::nan("") : (x[0] - 0.8) * (x[0] - 0.8);
  };
  BoOptions opt;
  opt.iters = 30;
  const auto r = bo_minimize(f, {{0.0, 1.0}}, 6, opt);
  bool saw_inf = false;
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    if (r.evaluated[i][0] < 0.5) {
      EXPECT_TRUE(std::isinf(r.losses[i]));
      saw_inf = true;
    }
  }
  EXPECT_TRUE(saw_inf);
  EXPECT_NEAR(r.x[0], 0.8, 0.05);
}

TEST(Bo, DeterministicAndParallelInvariant) {
  const LossFn f = [](std::span<const double> x) { return std::abs(x[0] - 0.2) + x[1] * x[1]; };
  BoOptions opt;
  opt.iters = 25;
  const auto a = bo_minimize(f, {{0, 1}, {-1, 1}}, 9, opt);
  const auto b = bo_minimize(f, {{0, 1}, {-1, 1}}, 9, opt);
  opt.parallel = true;
  const auto c = bo_minimize(f, {{0, 1}, {-1, 1}}, 9, opt);
  EXPECT_EQ(a.evaluated, b.evaluated);
  EXPECT_EQ(a.evaluated, c.evaluated);
  EXPECT_EQ(a.losses, c.losses);
  const auto d = bo_minimize(f, {{0, 1}, {-1, 1}}, 10, opt);
  EXPECT_NE(a.evaluated, d.evaluated);
}

TEST(Bo, RejectsBadBounds) {
  const LossFn f = [](std::span<const double>) { return 0.0; };
  EXPECT_THROW(bo_minimize(f, {}, 1), ValidationError);
  EXPECT_THROW(bo_minimize(f, {{1.0, 1.0}}, 1), ValidationError);
  EXPECT_THROW(bo_minimize(f, {{0.0, INFINITY}}, 1), ValidationError);
}

TEST(RmseLoss, FormulaExamples) {
  PhenologyDataset d;
  d.cultivar = "x";
  PhenologyObservation o;
  o.year = 2000;
  o.weather = "synthetic:1:46";
  o.bud_break = 100;
  o.bloom = 140;
  o.veraison = 200;
  d.years = {o};
  StageOnsets p{2000, 104, 143, 200};
  EXPECT_NEAR(rmse_loss({p}, d, GrapeStage::Bloom), 5.0, 1e-12);
  EXPECT_NEAR(rmse_loss({p}, d, GrapeStage::BudBreak), 4.0, 1e-12);
  EXPECT_NEAR(rmse_loss({p}, d, GrapeStage::Veraison), 3.0, 1e-12);
  EXPECT_EQ(rmse_loss({StageOnsets{2000, 100, 140, 200}}, d, GrapeStage::Veraison), 0.0);
  StageOnsets never{2000, 100, 140, kOnsetNotReached};
  EXPECT_GE(rmse_loss({never}, d, GrapeStage::Veraison), 166.0);
}

TEST(RmseLoss, SkipsYearsMissingTheStagePair) {
  PhenologyDataset d;
  d.cultivar = "x";
  for (int y = 0; y < 3; ++y) {
    PhenologyObservation o;
    o.year = 2000 + y;
    o.weather = "synthetic:1:46";
    o.bud_break = 100;
    o.bloom = 140;
    d.years.push_back(o);
  }
  d.years[1].bud_break.reset();
  std::vector<StageOnsets> p(3, StageOnsets{0, 102, 140, 200});
  p[1].bloom = 170;
  // Year 1 lacks bud break, so only years 0 and 2 count: sqrt(0 + 4) = 2.
  EXPECT_NEAR(rmse_loss(p, d, GrapeStage::Bloom), 2.0, 1e-12);
  EXPECT_THROW(rmse_loss(p, d, GrapeStage::Veraison), ValidationError);
  EXPECT_NEAR(stage_rmse(p, d, GrapeStage::Bloom), std::sqrt(900.0 / 3), 1e-12);
}

TEST(Dataset, CsvRoundTripAndValidation) {
  TempDir dir("cal");
  PhenologyDataset d;
  d.cultivar = "riesling";
  PhenologyObservation o;
  o.year = 2010;
  o.weather = "synthetic:5:46";
  o.bud_break = 101;
  o.veraison = 190;
  d.years = {o};
  write_phenology_dataset(d, dir.path() / "d.csv");
  EXPECT_EQ(load_phenology_dataset(dir.path() / "d.csv"), d);

  spit(dir.path() / "bad.csv",
       "cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison\nx,2010,synthetic:1:46,150,120,\n");
  EXPECT_THROW(load_phenology_dataset(dir.path() / "bad.csv"), ValidationError);
  spit(dir.path() / "bad2.csv",
       "cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison\nx,2010,synthetic:1:46,400,,\n");
  EXPECT_THROW(load_phenology_dataset(dir.path() / "bad2.csv"), ValidationError);
  spit(dir.path() / "empty.csv", "cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison\n");
  EXPECT_THROW(load_phenology_dataset(dir.path() / "empty.csv"), ValidationError);
}

TEST(Dataset, WeatherFileReferencesResolveRelativeToDataset) {
  TempDir dir("cal");
  dump_weather_table(synth_weather_years(3, 46.0, 2005, 2), dir.path() / "wx.csv");
  spit(dir.path() / "d.csv",
       "cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison\n"
       "x,2005,wx.csv,100,140,190\nx,2006,wx.csv,101,141,191\n");
  const auto d = load_phenology_dataset(dir.path() / "d.csv");
  const PreparedDataset prep(d);
  const auto grape = load_crop("grape", "default").phenology;
  const auto from_file = prep.predict(grape);
  const auto direct = predict_stage_onsets(grape, synth_weather_years(3, 46.0, 2005, 2));
  EXPECT_EQ(from_file, direct);
}

TEST(Calibration, ParameterAccessors) {
  PhenologyParams p;
  for (const auto& [name, b] : default_grape_bounds()) {
    set_phenology_parameter(p, name, 0.5 * (b.first + b.second));
    EXPECT_EQ(get_phenology_parameter(p, name), 0.5 * (b.first + b.second));
  }
  EXPECT_THROW(set_phenology_parameter(p, "NOPE", 1), ValidationError);
  EXPECT_EQ(stage_parameters(GrapeStage::BudBreak).size(), 5u);
  EXPECT_EQ(stage_parameters(GrapeStage::Bloom), std::vector<std::string>{"FORCE_BL"});
}

TEST(Calibration, RecoversSyntheticTruthAndIsDeterministic) {
  auto truth = load_crop("grape", "default").phenology;
  truth.force_bb = 75;
  truth.force_bl = 460;
  truth.force_ve = 1080;
  truth.tbase = 4.6;
  const auto d = synthetic_dataset(truth, 6, "synthetic:31:45");
  BoOptions opt;
  opt.iters = 150;
  const auto initial = load_crop("grape", "default").phenology;
  const auto a = calibrate_cultivar(d, initial, default_grape_bounds(), 3, opt);
  for (const auto& s : a.stages) {
    EXPECT_LE(s.rmse, 1.0) << to_string(s.stage);
    EXPECT_EQ(s.evaluations, 160);
    for (std::size_t i = 1; i < s.trace.size(); ++i) EXPECT_LE(s.trace[i], s.trace[i - 1]);
  }
  EXPECT_EQ(a.evaluations, 480);
  const auto b = calibrate_cultivar(d, initial, default_grape_bounds(), 3, opt);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(calibration_yaml(a), calibration_yaml(b));
}

TEST(Calibration, SingleYearDataset) {
  const auto truth = load_crop("grape", "riesling").phenology;
  const auto d = synthetic_dataset(truth, 1, "synthetic:2:44");
  BoOptions opt;
  opt.iters = 40;
  const auto r = calibrate_cultivar(d, load_crop("grape", "default").phenology,
                                    default_grape_bounds(), 1, opt);
  for (const auto& s : r.stages) EXPECT_TRUE(std::isfinite(s.rmse));
}

TEST(Calibration, MissingBoundsRejected) {
  const auto d = synthetic_dataset(load_crop("grape", "default").phenology, 1, "synthetic:2:44");
  auto bounds = default_grape_bounds();
  bounds.erase("FORCE_BL");
  BoOptions opt;
  opt.iters = 1;
  EXPECT_THROW(calibrate_cultivar(d, load_crop("grape", "default").phenology, bounds, 1, opt),
               ValidationError);
}
