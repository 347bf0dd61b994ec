#include "agrosim/calibration.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "agrosim/random.hpp"
#include "agrosim/text.hpp"

namespace agrosim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Latin hypercube in [0,1]^d: one point per stratum along every axis.
std::vector<std::vector<double>> latin_hypercube(int n, std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(n), std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
    }
    for (int i = 0; i < n; ++i) {
      pts[static_cast<std::size_t>(i)][j] = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / n;
    }
  }
  return pts;
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> to_box(const std::vector<double>& u, const Bounds& b) {
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) x[i] = b[i].first + u[i] * (b[i].second - b[i].first);
  return x;
}

double safe_eval(const LossFn& loss, const std::vector<double>& x) {
  const double v = loss(x);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

BoResult bo_minimize(const LossFn& loss, const Bounds& bounds, std::uint64_t seed,
                     const BoOptions& opt) {
  if (bounds.empty()) throw ValidationError("optimization needs at least one dimension");
  for (const auto& [lo, hi] : bounds) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw ValidationError("bounds must be finite with lo < hi");
    }
  }
  if (opt.iters < 0 || opt.n_init < 1 || opt.n_candidates < 1 || opt.n_local < 0) {
    throw ValidationError("invalid optimizer options");
  }
  const std::size_t d = bounds.size();
  Rng init_rng(mix_seed(seed, 0));
  Rng pool_rng(mix_seed(seed, 1));
  Rng local_rng(mix_seed(seed, 2));

  BoResult res;
  std::vector<std::vector<double>> unit = latin_hypercube(opt.n_init, d, init_rng);
  std::vector<double> init_losses(unit.size());
  {
    std::exception_ptr error;
    const auto n = static_cast<std::ptrdiff_t>(unit.size());
#pragma omp parallel for schedule(dynamic) if (opt.parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        const auto u = static_cast<std::size_t>(i);
        init_losses[u] = safe_eval(loss, to_box(unit[u], bounds));
      } catch (...) {
#pragma omp critical(agrosim_bo_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }

  IncrementalGp gp(d, opt.hyper, static_cast<std::size_t>(opt.n_init + opt.iters));
  double best = kInf;
  std::size_t best_i = 0;
  double worst_finite = -kInf;
  std::vector<std::size_t> infinite;

  auto record = [&](const std::vector<double>& u, double v) {
    const std::size_t i = res.losses.size();
    res.evaluated.push_back(to_box(u, bounds));
    res.losses.push_back(v);
    if (v < best) {
      best = v;
      best_i = i;
    }
    res.trace.push_back(best);
    // Non-finite losses enter the GP as the worst finite loss seen so far.
    if (std::isfinite(v) && v > worst_finite) {
      worst_finite = v;
      for (auto j : infinite) gp.set_target(j, worst_finite);
    }
    const double target = std::isfinite(v) ? v : (std::isfinite(worst_finite) ? worst_finite : 0.0);
    if (!std::isfinite(v)) infinite.push_back(i);
    gp.add(u, target);
  };

  for (std::size_t i = 0; i < unit.size(); ++i) record(unit[i], init_losses[i]);

  std::vector<std::vector<double>> pool(static_cast<std::size_t>(opt.n_candidates), std::vector<double>(d));
  for (auto& p : pool) {
    for (auto& v : p) v = pool_rng.uniform();
  }
  gp.set_pool(pool);
  std::vector<bool> used(pool.size(), false);
  std::vector<double> means, stds;

  for (int it = 0; it < opt.iters; ++it) {
    const std::vector<double>& incumbent = unit[best_i];
    std::vector<std::vector<double>> local(static_cast<std::size_t>(opt.n_local), incumbent);
    for (std::size_t j = 0; j < local.size(); ++j) {
      const double scale = j % 2 == 0 ? 0.1 : 0.02;
      const std::size_t forced = local_rng.below(d);
      for (std::size_t k = 0; k < d; ++k) {
        const bool move = k == forced || local_rng.uniform() < 0.5;
        const double step = scale * gaussian(local_rng);
        if (move) local[j][k] = std::clamp(local[j][k] + step, 0.0, 1.0);
      }
    }

    gp.predict_pool(means, stds);
    for (const auto& p : local) {
      const GpPrediction pr = gp.predict(p);
      means.push_back(pr.mean);
      stds.push_back(pr.std);
    }
    const std::vector<double> ei = opt.parallel ? score_ei_parallel(means, stds, best)
                                                : score_ei_serial(means, stds, best);
    std::ptrdiff_t pick = -1;
    double top = 0.0;
    for (std::size_t j = 0; j < ei.size(); ++j) {
      if (j < pool.size() && used[j]) continue;
      if (ei[j] > top) {
        top = ei[j];
        pick = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (pick < 0) {
      // No expected improvement anywhere: take the next unused pool point.
      const auto it_unused = std::find(used.begin(), used.end(), false);
      pick = it_unused == used.end() ? static_cast<std::ptrdiff_t>(pool.size())
                                     : it_unused - used.begin();
    }
    const auto ps = static_cast<std::size_t>(pick);
    std::vector<double> u;
    if (ps < pool.size()) {
      used[ps] = true;
      u = pool[ps];
    } else if (ps - pool.size() < local.size()) {
      u = local[ps - pool.size()];
    } else {
      u = incumbent;
    }
    unit.push_back(u);
    record(u, safe_eval(loss, to_box(u, bounds)));
  }

  res.best = best;
  res.x = res.evaluated[best_i];
  return res;
}

// ---------------------------------------------------------------------------

std::optional<int> PhenologyObservation::onset(GrapeStage s) const {
  switch (s) {
    case GrapeStage::BudBreak: return bud_break;
    case GrapeStage::Bloom: return bloom;
    case GrapeStage::Veraison: return veraison;
    case GrapeStage::Dormant: break;
  }
  return std::nullopt;
}

void validate(const PhenologyDataset& d) {
  if (d.years.empty()) throw ValidationError("phenology dataset has no years");
  std::set<std::pair<std::string, int>> seen;
  for (const auto& y : d.years) {
    const std::string where = "phenology dataset year " + std::to_string(y.year);
    if (y.weather.empty()) throw ValidationError(where + ": missing weather reference");
    if (!seen.insert({y.weather, y.year}).second) throw ValidationError(where + ": repeated");
    int prev = 0;
    for (auto s : kCalibrationStages) {
      const auto o = y.onset(s);
      if (!o) continue;
      if (*o < 1 || *o > 366) throw ValidationError(where + ": onset outside 1..366");
      if (*o < prev) throw ValidationError(where + ": onsets out of stage order");
      prev = *o;
    }
  }
}

namespace {

std::optional<int> parse_onset(const std::string& cell, const std::string& where) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  return static_cast<int>(parse_long(t, where));
}

std::string onset_cell(const std::optional<int>& o) { return o ? std::to_string(*o) : ""; }

bool is_synthetic(const std::string& ref) { return ref.rfind("synthetic:", 0) == 0; }

}  // namespace

PhenologyDataset load_phenology_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open phenology dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  const auto header = split(trim(line), ',');
  const std::vector<std::string> expected = {"cultivar",     "year",      "weather_file",
                                             "doy_budbreak", "doy_bloom", "doy_veraison"};
  std::vector<std::string> cols;
  for (const auto& h : header) cols.push_back(trim(h));
  if (cols != expected) {
    throw ValidationError(path.string() +
                          ": header must be cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison");
  }
  PhenologyDataset d;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split(line, ',');
    if (f.size() != 6) throw ValidationError(where + ": expected 6 fields");
    const std::string cultivar = trim(f[0]);
    if (d.cultivar.empty()) d.cultivar = cultivar;
    else if (cultivar != d.cultivar) throw ValidationError(where + ": mixed cultivars");
    PhenologyObservation o;
    o.year = static_cast<int>(parse_long(trim(f[1]), where));
    o.weather = trim(f[2]);
    if (!is_synthetic(o.weather) && std::filesystem::path(o.weather).is_relative()) {
      o.weather = (path.parent_path() / o.weather).lexically_normal().string();
    }
    o.bud_break = parse_onset(f[3], where);
    o.bloom = parse_onset(f[4], where);
    o.veraison = parse_onset(f[5], where);
    d.years.push_back(std::move(o));
  }
  validate(d);
  return d;
}

void write_phenology_dataset(const PhenologyDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << "cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison\n";
  for (const auto& y : d.years) {
    out << d.cultivar << ',' << y.year << ',' << y.weather << ',' << onset_cell(y.bud_break) << ','
        << onset_cell(y.bloom) << ',' << onset_cell(y.veraison) << '\n';
  }
  if (!out) throw RuntimeError("failed writing " + path.string());
}

PreparedDataset::PreparedDataset(const PhenologyDataset& d) : dataset_(d) {
  validate(d);
  std::vector<std::string> refs;
  for (const auto& y : d.years) {
    if (std::find(refs.begin(), refs.end(), y.weather) == refs.end()) refs.push_back(y.weather);
  }
  for (const auto& ref : refs) {
    Group g;
    int first = 1 << 30, last = -(1 << 30);
    for (std::size_t i = 0; i < d.years.size(); ++i) {
      if (d.years[i].weather != ref) continue;
      g.rows.push_back(i);
      first = std::min(first, d.years[i].year);
      last = std::max(last, d.years[i].year);
    }
    if (is_synthetic(ref)) {
      const auto parts = split(ref, ':');
      if (parts.size() != 3) throw ValidationError("weather reference must be synthetic:SEED:LATITUDE");
      const auto seed = static_cast<std::uint64_t>(parse_long(parts[1], ref));
      const double lat = parse_double(parts[2], ref);
      g.series = synth_weather_years(seed, lat, first, last - first + 1, SynthWeatherParams{});
    } else {
      const WeatherSeries full = load_weather_table(ref);
      const auto from = jan1(first);
      const auto to = jan1(last + 1) - std::chrono::days{1};
      if (!full.covers(from, to)) {
        throw ValidationError(ref + " does not cover " + std::to_string(first) + ".." +
                              std::to_string(last));
      }
      std::vector<WeatherDay> days;
      for (const auto& w : full.days()) {
        if (w.date >= from && w.date <= to) days.push_back(w);
      }
      g.series = WeatherSeries(full.latitude(), full.longitude(), std::move(days));
    }
    groups_.push_back(std::move(g));
  }
}

std::vector<StageOnsets> PreparedDataset::predict(const PhenologyParams& p) const {
  std::vector<StageOnsets> out(dataset_.years.size());
  for (const auto& g : groups_) {
    const auto onsets = predict_stage_onsets(p, g.series);
    const int first = onsets.front().year;
    for (auto row : g.rows) {
      out[row] = onsets[static_cast<std::size_t>(dataset_.years[row].year - first)];
    }
  }
  return out;
}

const std::vector<std::string>& stage_parameters(GrapeStage s) {
  static const std::vector<std::string> bb = {"TBASEM", "CHILL_REQ", "DLCRIT", "TCHILL_MAX", "FORCE_BB"};
  static const std::vector<std::string> bl = {"FORCE_BL"};
  static const std::vector<std::string> ve = {"FORCE_VE"};
  switch (s) {
    case GrapeStage::BudBreak: return bb;
    case GrapeStage::Bloom: return bl;
    case GrapeStage::Veraison: return ve;
    case GrapeStage::Dormant: break;
  }
  throw ValidationError("the dormant stage has no parameters");
}

namespace {

double* phenology_field(PhenologyParams& p, const std::string& name) {
  if (name == "TBASEM") return &p.tbase;
  if (name == "CHILL_REQ") return &p.chill_req;
  if (name == "DLCRIT") return &p.dlcrit;
  if (name == "TCHILL_MAX") return &p.tchill_max;
  if (name == "FORCE_BB") return &p.force_bb;
  if (name == "FORCE_BL") return &p.force_bl;
  if (name == "FORCE_VE") return &p.force_ve;
  if (name == "TSUM1") return &p.tsum1;
  if (name == "TSUM2") return &p.tsum2;
  if (name == "TRELEASE") return &p.trelease;
  throw ValidationError("unknown phenology parameter '" + name + "'");
}

struct StageErrors {
  double sum_sq = 0.0;
  int n = 0;
};

}  // namespace

double get_phenology_parameter(const PhenologyParams& p, const std::string& name) {
  PhenologyParams copy = p;
  return *phenology_field(copy, name);
}

void set_phenology_parameter(PhenologyParams& p, const std::string& name, double value) {
  *phenology_field(p, name) = value;
}

double rmse_loss(const std::vector<StageOnsets>& predicted, const PhenologyDataset& d,
                 GrapeStage stage) {
  if (predicted.size() != d.years.size()) throw ValidationError("prediction count mismatch");
  const bool has_prev = stage != GrapeStage::BudBreak;
  const auto prev = static_cast<GrapeStage>(static_cast<int>(stage) - 1);
  double sk = 0.0, sp = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < d.years.size(); ++i) {
    const auto ok = d.years[i].onset(stage);
    const auto op = has_prev ? d.years[i].onset(prev) : std::optional<int>(0);
    if (!ok || !op) continue;
    const double ek = predicted[i][stage] - *ok;
    sk += ek * ek;
    if (has_prev) {
      const double ep = predicted[i][prev] - *op;
      sp += ep * ep;
    }
    ++n;
  }
  if (n == 0) {
    throw ValidationError(std::string("no dataset year observes the stage pair ending at ") +
                          to_string(stage));
  }
  return std::sqrt(sk / n + sp / n);
}

double stage_rmse(const std::vector<StageOnsets>& predicted, const PhenologyDataset& d,
                  GrapeStage stage) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < d.years.size(); ++i) {
    const auto o = d.years[i].onset(stage);
    if (!o) continue;
    const double e = predicted[i][stage] - *o;
    s += e * e;
    ++n;
  }
  if (n == 0) throw ValidationError(std::string("no dataset year observes ") + to_string(stage));
  return std::sqrt(s / n);
}

ParamBounds default_grape_bounds() {
  return {{"TBASEM", {0.0, 8.0}},        {"CHILL_REQ", {10.0, 90.0}},
          {"DLCRIT", {10.5, 14.0}},      {"TCHILL_MAX", {8.5, 12.0}},
          {"FORCE_BB", {20.0, 200.0}},   {"FORCE_BL", {250.0, 700.0}},
          {"FORCE_VE", {800.0, 1600.0}}};
}

CalibrationResult calibrate_cultivar(const PhenologyDataset& d, const PhenologyParams& initial,
                                     const ParamBounds& bounds, std::uint64_t seed,
                                     const BoOptions& options) {
  const PreparedDataset prep(d);
  CalibrationResult result;
  result.cultivar = d.cultivar;
  result.params = initial;
  for (std::size_t k = 0; k < kCalibrationStages.size(); ++k) {
    const GrapeStage stage = kCalibrationStages[k];
    StageFit& fit = result.stages[k];
    fit.stage = stage;
    fit.names = stage_parameters(stage);
    Bounds box;
    for (const auto& name : fit.names) {
      const auto it = bounds.find(name);
      if (it == bounds.end()) throw ValidationError("no bounds given for " + name);
      box.push_back(it->second);
    }
    const PhenologyParams frozen = result.params;
    const LossFn loss = [&](std::span<const double> x) {
      PhenologyParams p = frozen;
      for (std::size_t i = 0; i < x.size(); ++i) set_phenology_parameter(p, fit.names[i], x[i]);
      try {
        validate(p);
      } catch (const ValidationError&) {
        return kInf;
      }
      return rmse_loss(prep.predict(p), d, stage);
    };
    const BoResult bo = bo_minimize(loss, box, mix_seed(seed, k), options);
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
      set_phenology_parameter(result.params, fit.names[i], bo.x[i]);
    }
    fit.values = bo.x;
    fit.loss = bo.best;
    fit.trace = bo.trace;
    fit.evaluations = static_cast<int>(bo.losses.size());
    fit.rmse = stage_rmse(prep.predict(result.params), d, stage);
    result.evaluations += fit.evaluations;
  }
  return result;
}

std::string calibration_yaml(const CalibrationResult& r) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "cultivar" << YAML::Value << r.cultivar;
  out << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
  for (const char* name : {"TBASEM", "CHILL_REQ", "DLCRIT", "TCHILL_MAX", "FORCE_BB", "FORCE_BL", "FORCE_VE"}) {
    out << YAML::Key << name << YAML::Value << format_double(get_phenology_parameter(r.params, name));
  }
  out << YAML::EndMap;
  out << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : r.stages) {
    out << YAML::BeginMap;
    out << YAML::Key << "stage" << YAML::Value << to_string(s.stage);
    out << YAML::Key << "rmse_days" << YAML::Value << format_double(s.rmse);
    out << YAML::Key << "loss" << YAML::Value << format_double(s.loss);
    out << YAML::Key << "evaluations" << YAML::Value << s.evaluations;
    out << YAML::Key << "fitted" << YAML::Value << YAML::BeginMap;
    for (std::size_t i = 0; i < s.names.size(); ++i) {
      out << YAML::Key << s.names[i] << YAML::Value << format_double(s.values[i]);
    }
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "evaluations" << YAML::Value << r.evaluations;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace agrosim
