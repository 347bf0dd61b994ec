#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "agrosim/calibration.hpp"
#include "agrosim/config.hpp"
#include "agrosim/env.hpp"
#include "agrosim/error.hpp"
#include "agrosim/policies.hpp"
#include "agrosim/text.hpp"

namespace fs = std::filesystem;
using namespace agrosim;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "agromanagement YAML or a run_config.yaml snapshot")
      ->required();
  app->add_option("--set", c.sets, "override as dotted.key=value (repeatable)");
}

ResolvedConfig load(const Common& c) {
  std::vector<Override> ov;
  for (const auto& s : c.sets) ov.push_back(parse_override(s));
  return load_agro_config(c.config, ov);
}

nlohmann::json parse_params(const std::string& text) {
  if (text.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("--params is not valid JSON: ") + e.what());
  }
}

RewardConfig make_reward(const std::string& kind, double cost) {
  switch (parse_reward_kind(kind)) {
    case RewardConfig::Kind::YieldOnly: return RewardConfig::yield_only();
    case RewardConfig::Kind::CostPenalized: return RewardConfig::cost_penalized(cost);
    case RewardConfig::Kind::Threshold: return RewardConfig::threshold();
    case RewardConfig::Kind::RunoffPenalty: return RewardConfig::runoff_penalty();
  }
  return {};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw RuntimeError("cannot write " + path.string());
}

std::string render_log(const EpisodeLog& log, LogFormat f) {
  std::ostringstream os;
  if (f == LogFormat::Csv) write_log_csv(log, os);
  else write_log_jsonl(log, os);
  return os.str();
}

struct SimulateArgs {
  Common common;
  std::string policy = "no_op";
  std::string params;
  std::string format = "csv";
  std::string reward = "yield";
  double cost = 0.0;
  int farms = 1;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int simulate(const SimulateArgs& a) {
  const ResolvedConfig cfg = load(a.common);
  const LogFormat format = parse_log_format(a.format);
  if (a.farms < 1) throw ValidationError("--farms must be at least 1");
  EnvOptions opt;
  opt.reward = make_reward(a.reward, a.cost);
  Env env(std::vector<ResolvedConfig>(static_cast<std::size_t>(a.farms), cfg), opt);
  const auto policy = builtin_policy(a.policy, parse_params(a.params), opt.actions);
  const std::uint64_t seed = a.seed.value_or(cfg.agro.random_seed);
  const EpisodeResult r = run_episode(env, *policy, seed);
  const std::string text = render_log(r.farms.front(), format);
  double yield = 0.0;
  for (const auto& rec : r.farms.front().records) yield += rec.yield_delta;
  if (a.out.empty()) {
    std::cout << text;
  } else {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / (format == LogFormat::Csv ? "episode.csv" : "episode.jsonl"), text);
    dump_run_config(env.current_config(0), dir);
  }
  std::cerr << "env " << env.id() << ": " << r.actions.size() << " steps, reward "
            << format_double(r.total_reward()) << ", yield "
            << format_double(yield) << " kg/ha"
            << (r.terminated ? " (matured)" : " (horizon)") << "\n";
  return 0;
}

struct GenArgs {
  Common common;
  std::string policy = "random";
  std::string params;
  std::string format = "csv";
  int episodes = 10;
  std::optional<std::uint64_t> seed;
  double param_noise = 0.0;
  bool fixed_weather = false;
  bool serial = false;
  std::string out;
};

int gen_data(const GenArgs& a) {
  DatasetRequest req;
  req.config = load(a.common);
  req.policy = a.policy;
  req.policy_params = parse_params(a.params);
  req.format = parse_log_format(a.format);
  req.n_episodes = a.episodes;
  req.seed = a.seed.value_or(req.config.agro.random_seed);
  req.vary_weather = !a.fixed_weather;
  if (a.param_noise > 0.0) {
    req.randomization.param_noise = a.param_noise;
    req.randomization.noise_params = default_noise_params();
  }
  const Manifest m = generate_dataset(req, a.out, !a.serial);
  int records = 0;
  for (const auto& e : m.episodes) records += e.n_records;
  std::cerr << "wrote " << m.episodes.size() << " episodes (" << records << " records) to "
            << a.out << "\n";
  return 0;
}

struct CalibrateArgs {
  Common common;
  std::string dataset;
  std::uint64_t seed = 0;
  int iters = 500;
  std::vector<std::string> bounds;
  bool parallel = false;
  std::string out;
};

int calibrate(const CalibrateArgs& a) {
  const ResolvedConfig cfg = load(a.common);
  const PhenologyDataset d = load_phenology_dataset(a.dataset);
  ParamBounds bounds = default_grape_bounds();
  for (const auto& b : a.bounds) {
    const Override kv = parse_override(b);
    const auto parts = split(kv.second, ':');
    if (parts.size() != 2 || !bounds.contains(kv.first)) {
      throw ValidationError("--bound expects NAME=LO:HI for a calibrated parameter, got '" + b + "'");
    }
    bounds[kv.first] = {parse_double(parts[0], kv.first), parse_double(parts[1], kv.first)};
  }
  BoOptions opt;
  opt.iters = a.iters;
  opt.parallel = a.parallel;
  const CalibrationResult r = calibrate_cultivar(d, cfg.crop.phenology, bounds, a.seed, opt);
  const std::string yaml = calibration_yaml(r);
  std::ostringstream trace;
  trace << "stage,evaluation,best_loss\n";
  for (const auto& s : r.stages) {
    for (std::size_t i = 0; i < s.trace.size(); ++i) {
      trace << to_string(s.stage) << ',' << i + 1 << ',' << format_double(s.trace[i]) << '\n';
    }
  }
  if (a.out.empty()) {
    std::cout << yaml;
  } else {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / "calibration.yaml", yaml);
    write_text(dir / "trace.csv", trace.str());
  }
  for (const auto& s : r.stages) {
    std::cerr << to_string(s.stage) << ": rmse " << format_double(s.rmse) << " days\n";
  }
  return 0;
}

struct BenchArgs {
  Common common;
  int trials = 100;
};

int bench(const BenchArgs& a) {
  const ResolvedConfig cfg = load(a.common);
  const TimingStats t = benchmark(cfg, a.trials);
  std::printf("trials: %d\nsteps_per_episode: %d\n", t.trials, t.steps_per_episode);
  std::printf("episode_s: {mean: %.6g, std: %.6g}\n", t.episode.mean, t.episode.std);
  std::printf("step_s: {mean: %.6g, std: %.6g}\n", t.step.mean, t.step.std);
  std::printf("reset_s: {mean: %.6g, std: %.6g}\n", t.reset.mean, t.reset.std);
  return 0;
}

int list_crops_cmd() {
  for (const auto& c : list_crops()) {
    std::cout << c.name << (c.perennial ? " (perennial):" : " (annual):");
    for (const auto& v : c.varieties) std::cout << ' ' << v;
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agrosim: crop simulation, environments, datasets and phenology calibration"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run one episode and print or save its daily log");
  add_common(s, sim.common);
  s->add_option("--policy", sim.policy, "baseline policy name");
  s->add_option("--params", sim.params, "policy parameters as a JSON object");
  s->add_option("--format", sim.format, "csv or jsonl");
  s->add_option("--reward", sim.reward, "yield, cost, threshold or runoff");
  s->add_option("--cost", sim.cost, "penalty per unit applied for the cost reward");
  s->add_option("--farms", sim.farms, "identical farms sharing one action");
  s->add_option("--seed", sim.seed, "episode seed (default: random_seed from the config)");
  s->add_option("--out", sim.out, "directory for the log and run_config.yaml");

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "roll a policy for many episodes and write a dataset");
  add_common(g, gen.common);
  g->add_option("--policy", gen.policy, "baseline policy name");
  g->add_option("--params", gen.params, "policy parameters as a JSON object");
  g->add_option("--format", gen.format, "csv or jsonl");
  g->add_option("--episodes", gen.episodes, "number of episodes");
  g->add_option("--seed", gen.seed, "dataset seed (default: random_seed from the config)");
  g->add_option("--param-noise", gen.param_noise, "relative uniform noise on crop/site parameters");
  g->add_flag("--fixed-weather", gen.fixed_weather, "reuse the configured synthetic weather seed");
  g->add_flag("--serial", gen.serial, "render episodes on one thread");
  g->add_option("--out", gen.out, "output directory")->required();

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "fit grape phenology parameters to observed onsets");
  add_common(c, cal.common);
  c->add_option("--dataset", cal.dataset, "CSV of observed onsets")->required();
  c->add_option("--seed", cal.seed, "optimizer seed");
  c->add_option("--iters", cal.iters, "optimizer iterations per stage");
  c->add_option("--bound", cal.bounds, "search range as NAME=LO:HI (repeatable)");
  c->add_flag("--parallel", cal.parallel, "OpenMP for initial designs and acquisition scoring");
  c->add_option("--out", cal.out, "directory for calibration.yaml and trace.csv");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "time env reset, step and full episodes");
  add_common(b, bn.common);
  b->add_option("--trials", bn.trials, "number of timed episodes");

  auto* lc = app.add_subcommand("list-crops", "bundled crops and their varieties");
  auto* le = app.add_subcommand("list-envs", "registered environment ids");
  auto* lp = app.add_subcommand("list-policies", "baseline policy names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (s->parsed()) return simulate(sim);
    if (g->parsed()) return gen_data(gen);
    if (c->parsed()) return calibrate(cal);
    if (b->parsed()) return bench(bn);
    if (lc->parsed()) return list_crops_cmd();
    if (le->parsed()) {
      for (const auto& id : list_env_ids()) std::cout << id << '\n';
      return 0;
    }
    if (lp->parsed()) {
      for (const auto& p : policy_names()) std::cout << p << '\n';
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
