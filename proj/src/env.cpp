#include "agrosim/env.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "agrosim/text.hpp"

namespace agrosim {

const char* to_string(Channel c) {
  switch (c) {
    case Channel::N: return "N";
    case Channel::P: return "P";
    case Channel::K: return "K";
    case Channel::Water: return "W";
  }
  return "?";
}

void validate(const ActionSpec& s) {
  if (!(std::isfinite(s.f) && s.f > 0.0)) throw ValidationError("action spec: f must be > 0");
  if (!(std::isfinite(s.i) && s.i > 0.0)) throw ValidationError("action spec: i must be > 0");
  if (s.n < 1 || s.m < 1) throw ValidationError("action spec: n and m must be >= 1");
}

DecodedAction decode_action(const ActionSpec& spec, int index) {
  if (index < 0 || index >= spec.count()) {
    throw ValidationError("action index " + std::to_string(index) + " outside [0, " +
                          std::to_string(spec.count()) + ")");
  }
  DecodedAction a;
  if (index < 3 * spec.n) {
    a.channel = static_cast<Channel>(index / spec.n);
    a.level = index % spec.n;
    a.amount = a.level * spec.f;
  } else {
    a.channel = Channel::Water;
    a.level = index - 3 * spec.n;
    a.amount = a.level * spec.i;
  }
  return a;
}

int encode_action(const ActionSpec& spec, Channel channel, int level) {
  if (channel == Channel::Water) {
    if (level < 0 || level >= spec.m) throw ValidationError("irrigation level out of range");
    return 3 * spec.n + level;
  }
  if (level < 0 || level >= spec.n) throw ValidationError("fertilizer level out of range");
  return static_cast<int>(channel) * spec.n + level;
}

ActionAmounts to_amounts(const DecodedAction& a) {
  ActionAmounts out;
  if (a.channel == Channel::Water) out.water = a.amount;
  else out.fertilizer[static_cast<std::size_t>(a.channel)] = a.amount;
  return out;
}

// ---------------------------------------------------------------------------

void validate(const ObservationMask& mask) {
  if (mask.names.empty()) throw ValidationError("observation mask is empty");
  std::set<std::string> seen;
  for (const auto& n : mask.names) {
    FeatureRegistry::instance().require(n);
    if (!seen.insert(n).second) throw ValidationError("duplicate mask feature '" + n + "'");
  }
}

std::vector<std::size_t> mask_indices(const ObservationMask& mask) {
  validate(mask);
  std::vector<std::size_t> out;
  for (const auto& n : mask.names) out.push_back(FeatureRegistry::instance().require(n));
  return out;
}

std::vector<double> apply_mask(const std::vector<std::size_t>& indices,
                               const std::vector<double>& features) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(features.at(i));
  return out;
}

ObservationMask default_observation_mask() {
  return {{"DVS", "WSO", "TOTN", "TOTP", "TOTK", "TOTIRRIG", "SM", "NAVAIL_SUB", "PAVAIL_SUB",
           "KAVAIL_SUB", "IRRAD", "TEMP", "RAIN"}};
}

ObservationMask compact_observation_mask() {
  return {{"WSO", "DVS", "LAI", "SM", "RAIN", "IRRAD", "TEMP"}};
}

// ---------------------------------------------------------------------------

RewardConfig RewardConfig::cost_penalized(double c) {
  RewardConfig r;
  r.kind = Kind::CostPenalized;
  r.cost = c;
  return r;
}

RewardConfig RewardConfig::threshold(double fert_limit, double irrig_limit, double penalty) {
  RewardConfig r;
  r.kind = Kind::Threshold;
  r.fert_limit = fert_limit;
  r.irrig_limit = irrig_limit;
  r.penalty = penalty;
  return r;
}

RewardConfig RewardConfig::runoff_penalty(double penalty) {
  RewardConfig r;
  r.kind = Kind::RunoffPenalty;
  r.penalty = penalty;
  return r;
}

void validate(const RewardConfig& r) {
  for (double v : {r.cost, r.fert_limit, r.irrig_limit, r.penalty}) {
    if (!(std::isfinite(v) && v >= 0.0)) {
      throw ValidationError("reward: cost, limits and penalty must be finite and >= 0");
    }
  }
}

const char* to_string(RewardConfig::Kind k) {
  switch (k) {
    case RewardConfig::Kind::YieldOnly: return "yield";
    case RewardConfig::Kind::CostPenalized: return "cost";
    case RewardConfig::Kind::Threshold: return "threshold";
    case RewardConfig::Kind::RunoffPenalty: return "runoff";
  }
  return "?";
}

RewardConfig::Kind parse_reward_kind(const std::string& text) {
  for (auto k : {RewardConfig::Kind::YieldOnly, RewardConfig::Kind::CostPenalized,
                 RewardConfig::Kind::Threshold, RewardConfig::Kind::RunoffPenalty}) {
    if (text == to_string(k)) return k;
  }
  throw ValidationError("unknown reward '" + text + "' (expected yield, cost, threshold, runoff)");
}

bool threshold_violated(const RewardConfig& cfg, const IntervalOutcome& o) {
  const Totals& t = o.totals_after;
  const double fert = t.fertilizer[kN] + t.fertilizer[kP] + t.fertilizer[kK];
  const bool fert_over = o.action.fertilizer_total() > 0.0 && fert > cfg.fert_limit;
  const bool water_over = o.action.water > 0.0 && t.irrigation > cfg.irrig_limit;
  return fert_over || water_over;
}

double compute_reward(const RewardConfig& cfg, const IntervalOutcome& o) {
  switch (cfg.kind) {
    case RewardConfig::Kind::YieldOnly:
      return o.yield_delta;
    case RewardConfig::Kind::CostPenalized:
      return o.yield_delta - cfg.cost * (o.action.fertilizer_total() + o.action.water);
    case RewardConfig::Kind::Threshold:
      return o.yield_delta - (threshold_violated(cfg, o) ? cfg.penalty : 0.0);
    case RewardConfig::Kind::RunoffPenalty:
      return o.yield_delta - cfg.penalty * o.runoff_days;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

void validate(const RandomizationConfig& r) {
  if (!(std::isfinite(r.param_noise) && r.param_noise >= 0.0 && r.param_noise < 1.0)) {
    throw ValidationError("randomization: param_noise must lie in [0, 1)");
  }
  if (r.param_noise > 0.0 && r.noise_params.empty()) {
    throw ValidationError("randomization: param_noise needs a nonempty parameter list");
  }
}

std::vector<std::string> default_noise_params() {
  return {"crop.EPS", "crop.KDIF", "crop.SLA", "crop.TSUM1", "crop.TSUM2",
          "crop.Q10", "site.R_ABS", "site.R_UP"};
}

ResolvedConfig randomize(const ResolvedConfig& base, const RandomizationConfig& r, Rng& rng) {
  validate(r);
  if (!r.enabled()) return base;
  std::vector<Override> picks;
  if (!r.weather_years.empty()) {
    const int year = r.weather_years[rng.below(r.weather_years.size())];
    picks.emplace_back("agro.year", std::to_string(year));
  }
  if (!r.crop_site_pool.empty()) {
    const CropSite& cs = r.crop_site_pool[rng.below(r.crop_site_pool.size())];
    picks.emplace_back("agro.crop_name", cs.crop);
    picks.emplace_back("agro.crop_variety", cs.variety);
    picks.emplace_back("agro.site_name", cs.site);
    picks.emplace_back("agro.site_variation", cs.variation);
  }
  ResolvedConfig cfg = picks.empty() ? base : apply_overrides(base, picks);
  if (r.param_noise > 0.0) {
    for (const auto& path : r.noise_params) {
      const double scale = 1.0 + r.param_noise * rng.uniform(-1.0, 1.0);
      set_parameter(cfg, path, get_parameter(cfg, path) * scale);
    }
    validate(cfg);
  }
  return cfg;
}

// ---------------------------------------------------------------------------

std::string env_id(bool perennial, LimitationMode mode, bool multi) {
  return std::string(perennial ? "perennial" : "annual") + "-" + std::string(to_string(mode)) +
         "-" + (multi ? "multi" : "single");
}

std::string env_id(const ResolvedConfig& cfg, int n_farms) {
  return env_id(cfg.crop.perennial(), cfg.agro.limitation_mode, n_farms > 1);
}

std::vector<std::string> list_env_ids() {
  std::vector<std::string> out;
  for (bool perennial : {false, true}) {
    for (auto mode : {LimitationMode::Potential, LimitationMode::W, LimitationMode::N,
                      LimitationMode::NP, LimitationMode::NPK, LimitationMode::LNPKW}) {
      for (bool multi : {false, true}) out.push_back(env_id(perennial, mode, multi));
    }
  }
  return out;
}

EnvIdParts parse_env_id(const std::string& id) {
  const auto parts = split(id, '-');
  if (parts.size() != 3 || (parts[0] != "annual" && parts[0] != "perennial") ||
      (parts[2] != "single" && parts[2] != "multi")) {
    throw ValidationError("malformed environment id '" + id +
                          "' (expected {annual|perennial}-{limitation}-{single|multi})");
  }
  EnvIdParts p;
  p.perennial = parts[0] == "perennial";
  p.mode = parse_limitation_mode(parts[1]);
  p.multi = parts[2] == "multi";
  return p;
}

// ---------------------------------------------------------------------------

Env::Env(ResolvedConfig config, EnvOptions options)
    : Env(std::vector<ResolvedConfig>{std::move(config)}, std::move(options)) {}

Env::Env(std::vector<ResolvedConfig> farms, EnvOptions options)
    : base_(std::move(farms)), options_(std::move(options)), rng_(options_.seed) {
  if (base_.empty()) throw ValidationError("environment needs at least one farm");
  validate(options_.actions);
  validate(options_.reward);
  validate(options_.randomization);
  indices_ = mask_indices(options_.mask);
  for (const auto& f : base_) {
    validate(f);
    if (f.agro.step_interval_days != base_[0].agro.step_interval_days) {
      throw ValidationError("all farms must share step_interval_days");
    }
  }
}

std::string Env::id() const { return env_id(base_[0], static_cast<int>(base_.size())); }

const ResolvedConfig& Env::current_config(std::size_t farm) const {
  if (!started()) throw RuntimeError("environment has not been reset");
  return engines_.at(farm).config();
}

std::vector<double> Env::features(std::size_t farm) const {
  return engines_.at(farm).features(states_.at(farm));
}

std::vector<double> Env::observation() const {
  std::vector<double> obs;
  obs.reserve(observation_size());
  for (std::size_t f = 0; f < engines_.size(); ++f) {
    const auto part = apply_mask(indices_, features(f));
    obs.insert(obs.end(), part.begin(), part.end());
  }
  return obs;
}

std::vector<double> Env::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_ = Rng(*seed);
  const std::uint64_t episode_seed = rng_.next_u64();
  engines_.clear();
  states_.clear();
  logs_.clear();
  done_ = false;

  std::shared_ptr<const Scenario> first;
  for (std::size_t f = 0; f < base_.size(); ++f) {
    Rng farm_rng(mix_seed(episode_seed, f));
    ResolvedConfig cfg = randomize(base_[f], options_.randomization, farm_rng);
    if (f > 0 && cfg.agro.year != first->config.agro.year) {
      cfg = apply_overrides(cfg, {{"agro.year", std::to_string(first->config.agro.year)}});
    }
    auto scenario = f == 0 ? build_scenario(cfg) : build_scenario(cfg, first->weather);
    if (f == 0) first = scenario;
    engines_.emplace_back(scenario);
    states_.push_back(engines_.back().init_simulation());
    logs_.emplace_back();
    logs_.back().final_state = states_.back();
  }
  return observation();
}

StepOutcome Env::step(int action_index) {
  if (!started()) throw RuntimeError("step before reset");
  if (done_) throw RuntimeError("step after the episode ended");
  const DecodedAction decoded = decode_action(options_.actions, action_index);
  const ActionAmounts amounts = to_amounts(decoded);
  const int interval = base_[0].agro.step_interval_days;

  StepOutcome out;
  nlohmann::ordered_json farms = nlohmann::ordered_json::array();
  std::vector<double> farm_rewards;
  bool any_runoff = false;
  bool all_done = true;
  bool all_mature = true;

  for (std::size_t f = 0; f < engines_.size(); ++f) {
    IntervalOutcome o;
    double harvest = 0.0;
    SimState& s = states_[f];
    if (!s.terminated) o.action = amounts;
    for (int d = 0; d < interval && !s.terminated; ++d) {
      StepResult r = engines_[f].step_day(s, d == 0 ? amounts : ActionAmounts{});
      o.yield_delta += r.record.yield_delta;
      o.runoff_days += r.record.runoff ? 1 : 0;
      harvest += r.record.harvest;
      s = std::move(r.state);
      logs_[f].records.push_back(std::move(r.record));
    }
    logs_[f].final_state = s;
    o.totals_after = s.totals;
    const double reward = compute_reward(options_.reward, o);
    farm_rewards.push_back(reward);
    out.reward += reward;
    any_runoff = any_runoff || o.runoff_days > 0;
    all_done = all_done && s.terminated;
    all_mature = all_mature && s.end_reason == EndReason::Maturity;

    nlohmann::ordered_json fj;
    fj["reward"] = reward;
    fj["yield"] = yield_of(s);
    fj["yield_delta"] = o.yield_delta;
    fj["harvest"] = harvest;
    fj["runoff_days"] = o.runoff_days;
    fj["threshold_violation"] = threshold_violated(options_.reward, o);
    fj["terminated"] = s.terminated;
    fj["totals"] = {{"N", s.totals.fertilizer[kN]},
                    {"P", s.totals.fertilizer[kP]},
                    {"K", s.totals.fertilizer[kK]},
                    {"irrigation", s.totals.irrigation},
                    {"harvested", s.totals.harvested}};
    farms.push_back(std::move(fj));
  }

  done_ = all_done;
  out.terminated = all_done && all_mature;
  out.truncated = all_done && !all_mature;
  out.observation = observation();

  auto& info = out.info;
  info["env_id"] = id();
  info["day_index"] = states_[0].day_index;
  info["date"] = format_date(states_[0].date);
  info["action"] = {{"index", action_index},
                    {"channel", to_string(decoded.channel)},
                    {"level", decoded.level},
                    {"amount", decoded.amount}};
  info["runoff"] = any_runoff;
  info["farm_rewards"] = farm_rewards;
  info["farms"] = std::move(farms);
  return out;
}

}  // namespace agrosim
