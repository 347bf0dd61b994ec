#include "agrosim/policies.hpp"

#include <algorithm>
#include <set>

namespace agrosim {

namespace {

using json = nlohmann::json;

class ParamReader {
 public:
  ParamReader(const std::string& policy, const json& params, std::set<std::string> allowed)
      : policy_(policy), params_(params.is_null() ? json::object() : params) {
    if (!params_.is_object()) fail("parameters must be a JSON object");
    for (const auto& [k, v] : params_.items()) {
      if (!allowed.count(k)) fail("unknown parameter '" + k + "'");
    }
  }

  int integer(const std::string& key, int fallback, int lo, int hi) const {
    if (!params_.contains(key)) return fallback;
    const auto& v = params_.at(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    const int x = v.get<int>();
    if (x < lo || x > hi) {
      fail("'" + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return x;
  }

  double real(const std::string& key, double fallback, double lo) const {
    if (!params_.contains(key)) return fallback;
    const auto& v = params_.at(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!(x >= lo)) fail("'" + key + "' must be >= " + std::to_string(lo));
    return x;
  }

  Channel channel(const std::string& key, Channel fallback) const {
    if (!params_.contains(key)) return fallback;
    return parse_channel(params_.at(key));
  }

  const json& raw(const std::string& key) const { return params_.at(key); }
  bool has(const std::string& key) const { return params_.contains(key); }

  Channel parse_channel(const json& v) const {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "N") return Channel::N;
      if (s == "P") return Channel::P;
      if (s == "K") return Channel::K;
    }
    fail("channel must be one of \"N\", \"P\", \"K\"");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("policy " + policy_ + ": " + msg);
  }

 private:
  std::string policy_;
  json params_;
};

struct FeatureView {
  std::span<const double> values;
  double operator[](const char* name) const {
    return values[FeatureRegistry::instance().require(name)];
  }
};

class NoOp final : public Policy {
 public:
  using Policy::Policy;
  int act(const PolicyInput&) const override { return 0; }
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(json params, ActionSpec spec, std::uint64_t salt)
      : Policy("random", std::move(params), spec), salt_(salt) {}
  int act(const PolicyInput& in) const override {
    const auto h = mix_seed(mix_seed(in.episode_seed, salt_), static_cast<std::uint64_t>(in.day_index));
    return static_cast<int>(h % static_cast<std::uint64_t>(spec().count()));
  }

 private:
  std::uint64_t salt_;
};

class IntervalFert final : public Policy {
 public:
  IntervalFert(json params, ActionSpec spec, Channel c, int level, int period, int offset)
      : Policy("interval_fert", std::move(params), spec),
        index_(encode_action(spec, c, level)), period_(period), offset_(offset) {}
  int act(const PolicyInput& in) const override {
    return in.day_index >= offset_ && (in.day_index - offset_) % period_ == 0 ? index_ : 0;
  }

 private:
  int index_, period_, offset_;
};

class ThresholdIrrigate final : public Policy {
 public:
  ThresholdIrrigate(json params, ActionSpec spec, int level, double y)
      : Policy("threshold_irrigate", std::move(params), spec),
        index_(encode_action(spec, Channel::Water, level)), y_(y) {}
  int act(const PolicyInput& in) const override {
    return FeatureView{in.features}["SM"] < y_ ? index_ : 0;
  }

 private:
  int index_;
  double y_;
};

/// Nitrogen and water on alternating marks every `period` days.
class AlternatingNW final : public Policy {
 public:
  AlternatingNW(std::string name, json params, ActionSpec spec, int level, int period)
      : Policy(std::move(name), std::move(params), spec),
        n_(encode_action(spec, Channel::N, std::min(level, spec.n - 1))),
        w_(encode_action(spec, Channel::Water, std::min(level, spec.m - 1))),
        period_(period) {}
  int act(const PolicyInput& in) const override {
    if (in.day_index % period_ != 0) return 0;
    return (in.day_index / period_) % 2 == 0 ? n_ : w_;
  }

 private:
  int n_, w_, period_;
};

/// Nitrogen on the first day of each 30-day month, water on the second.
class MonthlyNW final : public Policy {
 public:
  MonthlyNW(json params, ActionSpec spec, int level)
      : Policy("monthly_NW", std::move(params), spec),
        n_(encode_action(spec, Channel::N, std::min(level, spec.n - 1))),
        w_(encode_action(spec, Channel::Water, std::min(level, spec.m - 1))) {}
  int act(const PolicyInput& in) const override {
    const int d = in.day_index % 30;
    return d == 0 ? n_ : d == 1 ? w_ : 0;
  }

 private:
  int n_, w_;
};

class ApplyUntilLimits final : public Policy {
 public:
  ApplyUntilLimits(json params, ActionSpec spec, double fert_limit, double irrig_limit,
                   int f_level, int w_level, int period)
      : Policy("apply_until_limits", std::move(params), spec),
        fert_limit_(fert_limit), irrig_limit_(irrig_limit),
        n_(encode_action(spec, Channel::N, f_level)),
        w_(encode_action(spec, Channel::Water, w_level)),
        f_amount_(f_level * spec.f), w_amount_(w_level * spec.i), period_(period) {}

  int act(const PolicyInput& in) const override {
    if (in.day_index % period_ != 0) return 0;
    const FeatureView v{in.features};
    const double fert = v["TOTN"] + v["TOTP"] + v["TOTK"];
    const bool fert_ok = f_amount_ > 0.0 && fert + f_amount_ <= fert_limit_;
    const bool water_ok = w_amount_ > 0.0 && v["TOTIRRIG"] + w_amount_ <= irrig_limit_;
    const bool prefer_fert = (in.day_index / period_) % 2 == 0;
    if (prefer_fert) return fert_ok ? n_ : water_ok ? w_ : 0;
    return water_ok ? w_ : fert_ok ? n_ : 0;
  }

 private:
  double fert_limit_, irrig_limit_;
  int n_, w_;
  double f_amount_, w_amount_;
  int period_;
};

class MaxEverything final : public Policy {
 public:
  using Policy::Policy;
  int act(const PolicyInput& in) const override {
    const auto c = static_cast<Channel>(in.day_index % 4);
    const int level = c == Channel::Water ? spec().m - 1 : spec().n - 1;
    return encode_action(spec(), c, level);
  }
};

class Schedule final : public Policy {
 public:
  Schedule(std::string name, json params, ActionSpec spec, std::vector<std::pair<int, int>> plan)
      : Policy(std::move(name), std::move(params), spec), plan_(std::move(plan)) {
    std::sort(plan_.begin(), plan_.end());
  }
  int act(const PolicyInput& in) const override {
    const auto it = std::lower_bound(plan_.begin(), plan_.end(), std::make_pair(in.day_index, -1));
    return it != plan_.end() && it->first == in.day_index ? it->second : 0;
  }

 private:
  std::vector<std::pair<int, int>> plan_;  // (day, action index), sorted
};

std::vector<std::pair<int, int>> read_plan(const ParamReader& r, const ActionSpec& spec,
                                           bool irrigation) {
  if (!r.has("schedule")) r.fail("'schedule' is required");
  const json& list = r.raw("schedule");
  if (!list.is_array()) r.fail("'schedule' must be a list");
  std::vector<std::pair<int, int>> plan;
  std::set<int> days;
  for (const auto& e : list) {
    if (!e.is_object() || !e.contains("day") || !e.contains("level") ||
        !e["day"].is_number_integer() || !e["level"].is_number_integer()) {
      r.fail("schedule entries need integer 'day' and 'level'");
    }
    const int day = e["day"].get<int>();
    const int level = e["level"].get<int>();
    if (day < 0) r.fail("schedule days must be >= 0");
    if (!days.insert(day).second) r.fail("schedule day " + std::to_string(day) + " repeats");
    const Channel c = irrigation ? Channel::Water
                                 : e.contains("channel") ? r.parse_channel(e["channel"]) : Channel::N;
    try {
      plan.emplace_back(day, encode_action(spec, c, level));
    } catch (const ValidationError&) {
      r.fail("schedule level " + std::to_string(level) + " out of range");
    }
  }
  return plan;
}

}  // namespace

const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names = {
      "no_op",      "random",       "interval_fert",      "threshold_irrigate",
      "biweekly_NW", "monthly_NW",  "apply_until_limits", "max_everything",
      "fert_only_schedule", "irrigate_only_schedule"};
  return names;
}

std::unique_ptr<Policy> builtin_policy(const std::string& name, const json& params,
                                       const ActionSpec& spec) {
  validate(spec);
  const json p = params.is_null() ? json::object() : params;
  if (name == "no_op") {
    ParamReader r(name, p, {});
    return std::make_unique<NoOp>(name, p, spec);
  }
  if (name == "random") {
    ParamReader r(name, p, {"seed"});
    return std::make_unique<RandomPolicy>(p, spec, static_cast<std::uint64_t>(r.integer("seed", 0, 0, INT32_MAX)));
  }
  if (name == "interval_fert") {
    ParamReader r(name, p, {"channel", "level", "period", "offset"});
    return std::make_unique<IntervalFert>(p, spec, r.channel("channel", Channel::N),
                                          r.integer("level", spec.n - 1, 0, spec.n - 1),
                                          r.integer("period", 7, 1, 100000),
                                          r.integer("offset", 0, 0, 100000));
  }
  if (name == "threshold_irrigate") {
    ParamReader r(name, p, {"level", "threshold"});
    return std::make_unique<ThresholdIrrigate>(p, spec, r.integer("level", spec.m - 1, 0, spec.m - 1),
                                               r.real("threshold", 0.2, 0.0));
  }
  if (name == "biweekly_NW") {
    ParamReader r(name, p, {"level"});
    return std::make_unique<AlternatingNW>(name, p, spec,
                                           r.integer("level", 2, 0, std::max(spec.n, spec.m) - 1), 14);
  }
  if (name == "monthly_NW") {
    ParamReader r(name, p, {"level"});
    return std::make_unique<MonthlyNW>(p, spec, r.integer("level", 2, 0, std::max(spec.n, spec.m) - 1));
  }
  if (name == "apply_until_limits") {
    ParamReader r(name, p, {"fert_limit", "irrig_limit", "fert_level", "water_level", "period"});
    return std::make_unique<ApplyUntilLimits>(
        p, spec, r.real("fert_limit", 80.0, 0.0), r.real("irrig_limit", 40.0, 0.0),
        r.integer("fert_level", spec.n - 1, 0, spec.n - 1),
        r.integer("water_level", spec.m - 1, 0, spec.m - 1), r.integer("period", 7, 1, 100000));
  }
  if (name == "max_everything") {
    ParamReader r(name, p, {});
    return std::make_unique<MaxEverything>(name, p, spec);
  }
  if (name == "fert_only_schedule") {
    ParamReader r(name, p, {"schedule"});
    return std::make_unique<Schedule>(name, p, spec, read_plan(r, spec, false));
  }
  if (name == "irrigate_only_schedule") {
    ParamReader r(name, p, {"schedule"});
    return std::make_unique<Schedule>(name, p, spec, read_plan(r, spec, true));
  }
  std::string all;
  for (const auto& n : policy_names()) all += (all.empty() ? "" : ", ") + n;
  throw ValidationError("unknown policy '" + name + "' (available: " + all + ")");
}

}  // namespace agrosim
