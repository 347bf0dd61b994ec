#include <gtest/gtest.h>

#include <set>

#include "agrosim/policies.hpp"
#include "support.hpp"

using namespace agrosim;
using agrosim::testing::agro;
using json = nlohmann::json;

namespace {

const ResolvedConfig& wheat() {
  static const ResolvedConfig cfg = agro("wheat");
  return cfg;
}

EpisodeLog roll(const std::string& name, const json& params = json::object(),
                std::uint64_t seed = 3) {
  const auto p = builtin_policy(name, params, ActionSpec{});
  return run_episode(wheat(), *p, seed);
}

double feature(const DailyRecord& r, const std::string& name) {
  return r.features[FeatureRegistry::instance().require(name)];
}

ActionAmounts amounts(int index) { return to_amounts(decode_action(ActionSpec{}, index)); }

}  // namespace

TEST(Policies, NamesAllConstruct) {
  EXPECT_EQ(policy_names().size(), 10u);
  for (const auto& name : policy_names()) {
    json params = json::object();
    if (name.find("schedule") != std::string::npos) params["schedule"] = json::array();
    const auto p = builtin_policy(name, params, ActionSpec{});
    EXPECT_EQ(p->name(), name);
  }
}

TEST(Policies, NoOpNeverActs) {
  for (const auto& r : roll("no_op").records) EXPECT_TRUE(r.action.is_noop());
}

TEST(Policies, IntervalFertPeriodAndOffset) {
  const auto log = roll("interval_fert", {{"channel", "P"}, {"level", 2}, {"period", 5}, {"offset", 3}});
  for (const auto& r : log.records) {
    const bool due = r.day_index >= 3 && (r.day_index - 3) % 5 == 0;
    EXPECT_DOUBLE_EQ(r.action.fertilizer[kP], due ? 40.0 : 0.0) << r.day_index;
    EXPECT_EQ(r.action.fertilizer[kN], 0.0);
    EXPECT_EQ(r.action.water, 0.0);
  }
}

TEST(Policies, ThresholdIrrigateFollowsSoilMoisture) {
  const auto p = builtin_policy("threshold_irrigate", {{"threshold", 0.25}, {"level", 1}}, ActionSpec{});
  const auto log = run_episode(wheat(), *p, 5);
  int acted = 0;
  for (std::size_t i = 1; i < log.records.size(); ++i) {
    const double sm = feature(log.records[i - 1], "SM");
    EXPECT_DOUBLE_EQ(log.records[i].action.water, sm < 0.25 ? 2.0 : 0.0) << i;
    acted += log.records[i].action.water > 0;
  }
  EXPECT_GT(acted, 0);
}

TEST(Policies, BiweeklyAlternatesNitrogenAndWater) {
  const auto log = roll("biweekly_NW");
  int marks = 0;
  for (const auto& r : log.records) {
    if (r.day_index % 14 != 0) {
      EXPECT_TRUE(r.action.is_noop());
      continue;
    }
    ++marks;
    if ((r.day_index / 14) % 2 == 0) {
      EXPECT_DOUBLE_EQ(r.action.fertilizer[kN], 40.0);
    } else {
      EXPECT_DOUBLE_EQ(r.action.water, 4.0);
    }
  }
  EXPECT_GE(marks, 5);
}

TEST(Policies, MonthlyNitrogenThenWater) {
  for (const auto& r : roll("monthly_NW", {{"level", 3}}).records) {
    const int d = r.day_index % 30;
    EXPECT_DOUBLE_EQ(r.action.fertilizer[kN], d == 0 ? 60.0 : 0.0);
    EXPECT_DOUBLE_EQ(r.action.water, d == 1 ? 6.0 : 0.0);
  }
}

TEST(Policies, ApplyUntilLimitsStaysWithinLimits) {
  const auto log = roll("apply_until_limits", {{"fert_limit", 100}, {"irrig_limit", 10}});
  double fert = 0.0, water = 0.0;
  for (const auto& r : log.records) {
    if (r.day_index % 7 != 0) {
      EXPECT_TRUE(r.action.is_noop());
    }
    fert += r.action.fertilizer[kN] + r.action.fertilizer[kP] + r.action.fertilizer[kK];
    water += r.action.water;
  }
  EXPECT_DOUBLE_EQ(fert, 60.0);
  EXPECT_DOUBLE_EQ(water, 6.0);
  EXPECT_LE(fert, 100.0);
  EXPECT_LE(water, 10.0);
}

TEST(Policies, ApplyUntilLimitsDefaults) {
  const auto log = roll("apply_until_limits");
  double fert = 0.0, water = 0.0;
  for (const auto& r : log.records) {
    fert += r.action.fertilizer[kN];
    water += r.action.water;
  }
  EXPECT_LE(fert, 80.0);
  EXPECT_LE(water, 40.0);
  EXPECT_GT(fert, 0.0);
  EXPECT_GT(water, 0.0);
}

TEST(Policies, MaxEverythingCyclesChannels) {
  const auto p = builtin_policy("max_everything", json::object(), ActionSpec{});
  const ActionSpec spec;
  std::vector<double> feats(FeatureRegistry::instance().size(), 0.0);
  for (int d = 0; d < 12; ++d) {
    const auto a = decode_action(spec, p->act({d, feats, 0}));
    EXPECT_EQ(static_cast<int>(a.channel), d % 4);
    EXPECT_EQ(a.level, 3);
  }
}

TEST(Policies, SchedulesActOnListedDays) {
  const json sched = {{"schedule", {{{"day", 10}, {"level", 2}, {"channel", "K"}},
                                    {{"day", 3}, {"level", 1}}}}};
  const auto fert = roll("fert_only_schedule", sched);
  for (const auto& r : fert.records) {
    if (r.day_index == 3) {
      EXPECT_EQ(r.action, amounts(encode_action(ActionSpec{}, Channel::N, 1)));
    } else if (r.day_index == 10) {
      EXPECT_EQ(r.action, amounts(encode_action(ActionSpec{}, Channel::K, 2)));
    } else {
      EXPECT_TRUE(r.action.is_noop());
    }
  }
  const auto water = roll("irrigate_only_schedule", {{"schedule", {{{"day", 4}, {"level", 3}}}}});
  for (const auto& r : water.records) EXPECT_DOUBLE_EQ(r.action.water, r.day_index == 4 ? 6.0 : 0.0);
}

TEST(Policies, ScheduleErrors) {
  const ActionSpec spec;
  EXPECT_THROW(builtin_policy("fert_only_schedule", json::object(), spec), ValidationError);
  EXPECT_THROW(builtin_policy("fert_only_schedule", {{"schedule", 3}}, spec), ValidationError);
  EXPECT_THROW(builtin_policy("fert_only_schedule", {{"schedule", {{{"day", 1}}}}}, spec),
               ValidationError);
  EXPECT_THROW(builtin_policy("fert_only_schedule",
                              {{"schedule", {{{"day", 1}, {"level", 1}}, {{"day", 1}, {"level", 2}}}}},
                              spec),
               ValidationError);
  EXPECT_THROW(builtin_policy("irrigate_only_schedule", {{"schedule", {{{"day", 1}, {"level", 4}}}}}, spec),
               ValidationError);
  EXPECT_THROW(builtin_policy("irrigate_only_schedule", {{"schedule", {{{"day", -1}, {"level", 1}}}}}, spec),
               ValidationError);
}

TEST(Policies, RandomIsReproducibleAndCovers) {
  const auto a = roll("random", {{"seed", 9}}, 11);
  const auto b = roll("random", {{"seed", 9}}, 11);
  const auto c = roll("random", {{"seed", 10}}, 11);
  ASSERT_EQ(a.records.size(), b.records.size());
  bool differs = false;
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].action, b.records[i].action);
    if (i < c.records.size() && !(a.records[i].action == c.records[i].action)) differs = true;
    const auto& x = a.records[i].action;
    seen.insert({x.fertilizer[0], x.fertilizer[1], x.fertilizer[2], x.water});
  }
  EXPECT_TRUE(differs);
  EXPECT_GE(seen.size(), 12u);
}

TEST(Policies, RejectsUnknownNamesAndParameters) {
  const ActionSpec spec;
  EXPECT_THROW(builtin_policy("fertilize_everything", json::object(), spec), ValidationError);
  EXPECT_THROW(builtin_policy("no_op", {{"level", 1}}, spec), ValidationError);
  EXPECT_THROW(builtin_policy("interval_fert", {{"period", 0}}, spec), ValidationError);
  EXPECT_THROW(builtin_policy("interval_fert", {{"level", 4}}, spec), ValidationError);
  EXPECT_THROW(builtin_policy("interval_fert", {{"channel", "water"}}, spec), ValidationError);
  EXPECT_THROW(builtin_policy("threshold_irrigate", {{"threshold", "low"}}, spec), ValidationError);
  EXPECT_THROW(builtin_policy("random", json::array(), spec), ValidationError);
}

TEST(Policies, EpisodeNeedsMatchingSpec) {
  ActionSpec other;
  other.n = 3;
  const auto p = builtin_policy("no_op", nullptr, other);
  Env env(wheat(), EnvOptions{});
  EXPECT_THROW(run_episode(env, *p, 0), ValidationError);
}

TEST(Policies, EpisodeResultShape) {
  EnvOptions opt;
  Env env(agro("wheat", {{"agro.step_interval_days", "3"}}), opt);
  const auto p = builtin_policy("biweekly_NW", nullptr, opt.actions);
  const auto res = run_episode(env, *p, 2);
  EXPECT_EQ(res.actions.size(), res.rewards.size());
  EXPECT_EQ(res.observations.size(), res.actions.size() + 1);
  EXPECT_NE(res.terminated, res.truncated);
  ASSERT_EQ(res.farms.size(), 1u);
  EXPECT_EQ(res.farms[0].records.size(), static_cast<std::size_t>(res.farms[0].final_state.day_index));
}

TEST(Policies, BatchSerialMatchesParallel) {
  const auto p = builtin_policy("random", {{"seed", 4}}, ActionSpec{});
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};
  const auto s = run_batch_serial(wheat(), *p, seeds);
  const auto q = run_batch_parallel(wheat(), *p, seeds);
  ASSERT_EQ(s.size(), q.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].records, q[i].records);
    EXPECT_EQ(s[i].final_state, q[i].final_state);
  }
}
