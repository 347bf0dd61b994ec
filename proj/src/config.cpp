#include "agrosim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "agrosim/error.hpp"
#include "agrosim/text.hpp"

#ifndef AGROSIM_DEFAULT_DATA_DIR
#define AGROSIM_DEFAULT_DATA_DIR "data"
#endif

namespace agrosim {

namespace {

// ---------------------------------------------------------------------------
// Typed parameter tables. Each entry reads and writes one named parameter of
// a crop or site through YAML nodes, so files, overrides and snapshots share
// one code path.

enum class Kind { Real, Integer, Boolean, Table };

template <class T>
struct Param {
  std::string name;
  Kind kind;
  std::function<double*(T&)> real;  // Real only
  std::function<YAML::Node(const T&)> get;
  std::function<void(T&, const YAML::Node&)> set;
};

template <class T>
Param<T> real(std::string name, std::function<double&(T&)> ref) {
  Param<T> p{std::move(name), Kind::Real, nullptr, nullptr, nullptr};
  p.real = [ref](T& t) { return &ref(t); };
  p.get = [ref](const T& t) { return YAML::Node(format_double(ref(const_cast<T&>(t)))); };
  p.set = [ref](T& t, const YAML::Node& n) { ref(t) = n.as<double>(); };
  return p;
}

template <class T>
Param<T> integer(std::string name, std::function<int&(T&)> ref) {
  Param<T> p{std::move(name), Kind::Integer, nullptr, nullptr, nullptr};
  p.get = [ref](const T& t) { return YAML::Node(ref(const_cast<T&>(t))); };
  p.set = [ref](T& t, const YAML::Node& n) { ref(t) = n.as<int>(); };
  return p;
}

template <class T>
Param<T> boolean(std::string name, std::function<bool&(T&)> ref) {
  Param<T> p{std::move(name), Kind::Boolean, nullptr, nullptr, nullptr};
  p.get = [ref](const T& t) { return YAML::Node(ref(const_cast<T&>(t))); };
  p.set = [ref](T& t, const YAML::Node& n) { ref(t) = n.as<bool>(); };
  return p;
}

template <class T>
Param<T> table(std::string name, std::function<std::vector<DvsKnot>&(T&)> ref) {
  Param<T> p{std::move(name), Kind::Table, nullptr, nullptr, nullptr};
  p.get = [ref](const T& t) {
    YAML::Node seq(YAML::NodeType::Sequence);
    for (const auto& k : ref(const_cast<T&>(t))) {
      YAML::Node row(YAML::NodeType::Sequence);
      row.SetStyle(YAML::EmitterStyle::Flow);
      row.push_back(format_double(k.dvs));
      for (double v : k.values) row.push_back(format_double(v));
      seq.push_back(row);
    }
    return seq;
  };
  p.set = [ref](T& t, const YAML::Node& n) {
    if (!n.IsSequence()) throw YAML::BadConversion(n.Mark());
    std::vector<DvsKnot> rows;
    for (const auto& row : n) {
      if (!row.IsSequence() || row.size() != 1 + kOrganCount) {
        throw YAML::BadConversion(row.Mark());
      }
      DvsKnot k;
      k.dvs = row[0].as<double>();
      for (std::size_t o = 0; o < kOrganCount; ++o) k.values[o] = row[o + 1].as<double>();
      rows.push_back(k);
    }
    ref(t) = std::move(rows);
  };
  return p;
}

const std::vector<Param<CropParams>>& crop_params() {
  using C = CropParams;
  static const std::vector<Param<C>> params = {
      real<C>("TBASEM", [](C& c) -> double& { return c.phenology.tbase; }),
      real<C>("CHILL_REQ", [](C& c) -> double& { return c.phenology.chill_req; }),
      real<C>("FORCE_BB", [](C& c) -> double& { return c.phenology.force_bb; }),
      real<C>("FORCE_BL", [](C& c) -> double& { return c.phenology.force_bl; }),
      real<C>("FORCE_VE", [](C& c) -> double& { return c.phenology.force_ve; }),
      real<C>("DLCRIT", [](C& c) -> double& { return c.phenology.dlcrit; }),
      real<C>("TCHILL_MAX", [](C& c) -> double& { return c.phenology.tchill_max; }),
      real<C>("TSUM1", [](C& c) -> double& { return c.phenology.tsum1; }),
      real<C>("TSUM2", [](C& c) -> double& { return c.phenology.tsum2; }),
      integer<C>("DORM_MIN", [](C& c) -> int& { return c.phenology.dorm_min; }),
      integer<C>("STAG_MAX", [](C& c) -> int& { return c.phenology.stag_max; }),
      real<C>("TRELEASE", [](C& c) -> double& { return c.phenology.trelease; }),
      real<C>("EPS", [](C& c) -> double& { return c.canopy.eps; }),
      real<C>("KDIF", [](C& c) -> double& { return c.canopy.k_ext; }),
      real<C>("SLA", [](C& c) -> double& { return c.canopy.sla; }),
      real<C>("Q10", [](C& c) -> double& { return c.canopy.q10; }),
      real<C>("RMR", [](C& c) -> double& { return c.canopy.maint[kRoots]; }),
      real<C>("RMS", [](C& c) -> double& { return c.canopy.maint[kStems]; }),
      real<C>("RML", [](C& c) -> double& { return c.canopy.maint[kLeaves]; }),
      real<C>("RMO", [](C& c) -> double& { return c.canopy.maint[kStorage]; }),
      table<C>("PART_TABLE", [](C& c) -> std::vector<DvsKnot>& { return c.canopy.part_table; }),
      table<C>("DEATH_TABLE", [](C& c) -> std::vector<DvsKnot>& { return c.canopy.death_table; }),
      real<C>("A_AGE", [](C& c) -> double& { return c.canopy.a_age; }),
      real<C>("B_AGE", [](C& c) -> double& { return c.canopy.b_age; }),
      real<C>("NDEM", [](C& c) -> double& { return c.demand[kN]; }),
      real<C>("PDEM", [](C& c) -> double& { return c.demand[kP]; }),
      real<C>("KDEM", [](C& c) -> double& { return c.demand[kK]; }),
      real<C>("WRTI", [](C& c) -> double& { return c.initial_weight[kRoots]; }),
      real<C>("WSTI", [](C& c) -> double& { return c.initial_weight[kStems]; }),
      real<C>("WLVI", [](C& c) -> double& { return c.initial_weight[kLeaves]; }),
      real<C>("WSOI", [](C& c) -> double& { return c.initial_weight[kStorage]; }),
      real<C>("LEAF_FLUSH", [](C& c) -> double& { return c.leaf_flush; }),
      boolean<C>("START_DORMANT", [](C& c) -> bool& { return c.start_dormant; }),
      real<C>("AGE_INIT", [](C& c) -> double& { return c.initial_age; }),
  };
  return params;
}

const std::vector<Param<SiteSpec>>& site_params() {
  using S = SiteSpec;
  static const std::vector<Param<S>> params = {
      real<S>("SM0", [](S& s) -> double& { return s.params.porosity; }),
      real<S>("SMFC", [](S& s) -> double& { return s.params.field_capacity; }),
      real<S>("SMW", [](S& s) -> double& { return s.params.wilting_point; }),
      real<S>("SMCRIT", [](S& s) -> double& { return s.params.sm_crit; }),
      real<S>("RDMAX", [](S& s) -> double& { return s.params.root_depth; }),
      real<S>("R_ABS", [](S& s) -> double& { return s.params.r_abs; }),
      real<S>("R_ABS_WET", [](S& s) -> double& { return s.params.r_abs_wet; }),
      real<S>("R_UP", [](S& s) -> double& { return s.params.r_up; }),
      real<S>("RUNOFF_SURFACE", [](S& s) -> double& { return s.params.runoff_surface_threshold; }),
      real<S>("RUNOFF_WATER", [](S& s) -> double& { return s.params.runoff_water_threshold; }),
      real<S>("RUNOFF_LOSS", [](S& s) -> double& { return s.params.runoff_loss_frac; }),
      real<S>("PERC_RATE", [](S& s) -> double& { return s.params.perc_rate; }),
      real<S>("EVAP_BASE", [](S& s) -> double& { return s.params.evap_base; }),
      real<S>("SM_INIT", [](S& s) -> double& { return s.sm_init; }),
      real<S>("NSURF_INIT", [](S& s) -> double& { return s.surface_init[kN]; }),
      real<S>("PSURF_INIT", [](S& s) -> double& { return s.surface_init[kP]; }),
      real<S>("KSURF_INIT", [](S& s) -> double& { return s.surface_init[kK]; }),
      real<S>("NSUB_INIT", [](S& s) -> double& { return s.subsoil_init[kN]; }),
      real<S>("PSUB_INIT", [](S& s) -> double& { return s.subsoil_init[kP]; }),
      real<S>("KSUB_INIT", [](S& s) -> double& { return s.subsoil_init[kK]; }),
      real<S>("SYN_TMEAN", [](S& s) -> double& { return s.synth.t_mean; }),
      real<S>("SYN_TAMP", [](S& s) -> double& { return s.synth.t_amplitude; }),
      real<S>("SYN_TNOISE", [](S& s) -> double& { return s.synth.t_noise; }),
      real<S>("SYN_RANGE_MIN", [](S& s) -> double& { return s.synth.range_min; }),
      real<S>("SYN_RANGE_MAX", [](S& s) -> double& { return s.synth.range_max; }),
      real<S>("SYN_RAIN_PROB", [](S& s) -> double& { return s.synth.rain_probability; }),
      real<S>("SYN_RAIN_MEAN", [](S& s) -> double& { return s.synth.rain_mean; }),
      real<S>("SYN_WIND_MIN", [](S& s) -> double& { return s.synth.wind_min; }),
      real<S>("SYN_WIND_MAX", [](S& s) -> double& { return s.synth.wind_max; }),
  };
  return params;
}

template <class T>
const Param<T>* find_param(const std::vector<Param<T>>& table, const std::string& name) {
  for (const auto& p : table) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <class T>
void set_from_node(const std::vector<Param<T>>& table, T& target, const std::string& scope,
                   const std::string& name, const YAML::Node& value) {
  const auto* p = find_param(table, name);
  if (!p) throw ValidationError("unknown parameter " + scope + "." + name);
  try {
    p->set(target, value);
  } catch (const YAML::Exception&) {
    throw ValidationError("type mismatch for " + scope + "." + name);
  }
}

/// Fills every parameter from a mapping; missing or unknown keys are errors.
template <class T>
void read_all(const std::vector<Param<T>>& table, T& target, const YAML::Node& map,
              const std::string& scope) {
  if (!map || !map.IsMap()) throw ValidationError(scope + ": 'parameters' must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    set_from_node(table, target, scope, key, kv.second);
  }
  for (const auto& p : table) {
    if (!map[p.name]) throw ValidationError(scope + ": missing parameter " + p.name);
  }
}

template <class T>
YAML::Node write_all(const std::vector<Param<T>>& table, const T& source) {
  YAML::Node map(YAML::NodeType::Map);
  for (const auto& p : table) map[p.name] = p.get(source);
  return map;
}

YAML::Node load_yaml_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("file not found: " + path.string());
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::vector<std::string> yaml_stems(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".yaml") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> overlay_names(const YAML::Node& overlays) {
  std::vector<std::string> out;
  if (overlays && overlays.IsMap()) {
    for (const auto& kv : overlays) out.push_back(kv.first.as<std::string>());
  }
  return out;
}

template <class T>
void apply_overlay(const std::vector<Param<T>>& table, T& target, const YAML::Node& overlays,
                   const std::string& which, const std::string& what, const std::string& scope) {
  const auto names = overlay_names(overlays);
  if (std::find(names.begin(), names.end(), which) == names.end()) {
    throw ValidationError("unknown " + what + " '" + which + "' for " + scope +
                          " (available: " + join(names) + ")");
  }
  const YAML::Node overlay = overlays[which];
  if (!overlay || overlay.IsNull()) return;
  if (!overlay.IsMap()) throw ValidationError(scope + ": " + what + " must be a mapping");
  for (const auto& kv : overlay) {
    set_from_node(table, target, scope, kv.first.as<std::string>(), kv.second);
  }
}

// ---------------------------------------------------------------------------
// Agromanagement entries.

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

void set_agro(AgroConfig& a, const std::string& key, const YAML::Node& v) {
  try {
    if (key == "crop_name") a.crop_name = v.as<std::string>();
    else if (key == "crop_variety") a.crop_variety = v.as<std::string>();
    else if (key == "site_name") a.site_name = v.as<std::string>();
    else if (key == "site_variation") a.site_variation = v.as<std::string>();
    else if (key == "latitude") a.latitude = v.as<double>();
    else if (key == "longitude") a.longitude = v.as<double>();
    else if (key == "year") a.year = v.as<int>();
    else if (key == "sow_date") a.sow_date = v.as<std::string>();
    else if (key == "max_duration_days") a.max_duration_days = v.as<int>();
    else if (key == "n_seasons") a.n_seasons = v.as<int>();
    else if (key == "weather_source") a.weather_source = v.as<std::string>();
    else if (key == "limitation_mode") a.limitation_mode = parse_limitation_mode(v.as<std::string>());
    else if (key == "step_interval_days") a.step_interval_days = v.as<int>();
    else if (key == "random_seed") a.random_seed = v.as<std::uint64_t>();
    else throw ValidationError("unknown agromanagement entry '" + key + "'");
  } catch (const YAML::Exception&) {
    throw ValidationError("type mismatch for agro." + key);
  }
}

YAML::Node agro_node(const AgroConfig& a) {
  YAML::Node n(YAML::NodeType::Map);
  n["crop_name"] = a.crop_name;
  n["crop_variety"] = a.crop_variety;
  n["site_name"] = a.site_name;
  n["site_variation"] = a.site_variation;
  n["latitude"] = format_double(a.latitude);
  n["longitude"] = format_double(a.longitude);
  n["year"] = a.year;
  n["sow_date"] = a.sow_date;
  n["max_duration_days"] = a.max_duration_days;
  n["n_seasons"] = a.n_seasons;
  n["weather_source"] = a.weather_source;
  n["limitation_mode"] = std::string(to_string(a.limitation_mode));
  n["step_interval_days"] = a.step_interval_days;
  n["random_seed"] = a.random_seed;
  return n;
}

AgroConfig parse_agro(const YAML::Node& map, const std::string& where) {
  if (!map.IsMap()) throw ValidationError(where + ": agromanagement must be a mapping");
  AgroConfig a;
  for (const auto& kv : map) set_agro(a, normalize_key(kv.first.as<std::string>()), kv.second);
  for (const auto& key : agro_keys()) {
    if (!map[key]) throw ValidationError(where + ": missing agromanagement entry '" + key + "'");
  }
  return a;
}

YAML::Node scalar_node(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception&) {
    return YAML::Node(text);
  }
}

void resolve_weather_path(AgroConfig& a, const std::filesystem::path& base_dir) {
  if (a.weather_source == "synthetic" || a.weather_source.empty()) return;
  std::filesystem::path p(a.weather_source);
  if (p.is_relative() && !base_dir.empty()) a.weather_source = (base_dir / p).lexically_normal().string();
}

ResolvedConfig apply_overrides_impl(ResolvedConfig cfg, const std::vector<Override>& overrides,
                                    bool reload_catalog) {
  // Agro entries first: they may select a different crop or site file.
  std::vector<Override> rest;
  bool catalog_changed = false;
  for (const auto& [raw_key, value] : overrides) {
    const auto dot = raw_key.find('.');
    const std::string scope = dot == std::string::npos ? "" : raw_key.substr(0, dot);
    if (scope == "agro") {
      const std::string key = normalize_key(raw_key.substr(dot + 1));
      set_agro(cfg.agro, key, scalar_node(value));
      catalog_changed = catalog_changed || key == "crop_name" || key == "crop_variety" ||
                        key == "site_name" || key == "site_variation";
    } else if (scope == "crop" || scope == "site") {
      rest.emplace_back(raw_key, value);
    } else {
      throw ValidationError("unknown override path '" + raw_key +
                            "' (expected agro.*, crop.* or site.*)");
    }
  }
  if (reload_catalog && catalog_changed) {
    cfg.crop = load_crop(cfg.agro.crop_name, cfg.agro.crop_variety);
    cfg.site = load_site(cfg.agro.site_name, cfg.agro.site_variation);
  }
  for (const auto& [raw_key, value] : rest) {
    const auto dot = raw_key.find('.');
    const std::string scope = raw_key.substr(0, dot);
    const std::string name = raw_key.substr(dot + 1);
    if (scope == "crop") set_from_node(crop_params(), cfg.crop, "crop", name, scalar_node(value));
    else set_from_node(site_params(), cfg.site, "site", name, scalar_node(value));
  }
  for (const auto& [k, v] : overrides) {
    const std::string entry = k + "=" + v;
    if (std::find(cfg.overrides.begin(), cfg.overrides.end(), entry) == cfg.overrides.end()) {
      cfg.overrides.push_back(entry);
    }
  }
  validate(cfg);
  return cfg;
}

}  // namespace

const std::vector<std::string>& agro_keys() {
  static const std::vector<std::string> keys = {
      "crop_name", "crop_variety", "site_name",        "site_variation",     "latitude",
      "longitude", "year",         "sow_date",         "max_duration_days",  "n_seasons",
      "weather_source", "limitation_mode", "step_interval_days", "random_seed"};
  return keys;
}

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override must look like key=value: '" + text + "'");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("AGROSIM_DATA_DIR"); env && *env) return env;
  return AGROSIM_DEFAULT_DATA_DIR;
}

CropParams load_crop(const std::string& name, const std::string& variety) {
  const auto path = data_dir() / "crops" / (name + ".yaml");
  if (!std::filesystem::exists(path)) {
    std::vector<std::string> names;
    for (const auto& c : list_crops()) names.push_back(c.name);
    throw ValidationError("unknown crop '" + name + "' (available: " + join(names) + ")");
  }
  const YAML::Node root = load_yaml_file(path);
  CropParams c;
  c.name = name;
  c.variety = variety;
  const std::string kind = root["kind"] ? root["kind"].as<std::string>() : "";
  if (kind != "annual" && kind != "perennial") {
    throw ValidationError(path.string() + ": kind must be annual or perennial");
  }
  c.phenology.perennial = kind == "perennial";
  read_all(crop_params(), c, root["parameters"], "crop " + name);
  apply_overlay(crop_params(), c, root["varieties"], variety, "variety", "crop " + name);
  validate(c);
  return c;
}

SiteSpec load_site(const std::string& name, const std::string& variation) {
  const auto path = data_dir() / "sites" / (name + ".yaml");
  if (!std::filesystem::exists(path)) {
    throw ValidationError("unknown site '" + name + "' (available: " + join(list_sites()) + ")");
  }
  const YAML::Node root = load_yaml_file(path);
  SiteSpec s;
  s.name = name;
  s.variation = variation;
  read_all(site_params(), s, root["parameters"], "site " + name);
  apply_overlay(site_params(), s, root["variations"], variation, "variation", "site " + name);
  validate(s);
  return s;
}

std::vector<CropInfo> list_crops() {
  std::vector<CropInfo> out;
  for (const auto& stem : yaml_stems(data_dir() / "crops")) {
    const YAML::Node root = load_yaml_file(data_dir() / "crops" / (stem + ".yaml"));
    CropInfo info;
    info.name = stem;
    info.perennial = root["kind"] && root["kind"].as<std::string>() == "perennial";
    info.varieties = overlay_names(root["varieties"]);
    out.push_back(std::move(info));
  }
  return out;
}

std::vector<std::string> list_sites() { return yaml_stems(data_dir() / "sites"); }

void validate(const AgroConfig& a) {
  auto fail = [](const std::string& m) { throw ValidationError("agromanagement: " + m); };
  if (a.crop_name.empty() || a.site_name.empty()) fail("crop_name and site_name are required");
  if (!std::isfinite(a.latitude) || std::abs(a.latitude) > 66.0) fail("latitude must lie in [-66, 66]");
  if (!std::isfinite(a.longitude) || std::abs(a.longitude) > 180.0) fail("longitude must lie in [-180, 180]");
  if (a.max_duration_days < 1) fail("max_duration_days must be >= 1");
  if (a.n_seasons < 1) fail("n_seasons must be >= 1");
  if (a.step_interval_days < 1) fail("step_interval_days must be >= 1");
  const auto parts = split(a.sow_date, '-');
  if (parts.size() != 2 || parts[0].size() != 2 || parts[1].size() != 2) {
    fail("sow_date must look like MM-DD");
  }
  parse_date(std::to_string(a.year) + "-" + a.sow_date);
}

void validate(const ResolvedConfig& cfg) {
  validate(cfg.agro);
  validate(cfg.crop);
  validate(cfg.site);
  if (!cfg.crop.perennial() && cfg.agro.n_seasons != 1) {
    throw ValidationError("agromanagement: annual crops run a single season (n_seasons = 1)");
  }
}

ResolvedConfig resolve_config(const AgroConfig& agro, const std::vector<Override>& overrides) {
  ResolvedConfig cfg;
  cfg.agro = agro;
  // Apply agro overrides before touching the catalog so crop_name overrides select the file.
  std::vector<Override> agro_only;
  for (const auto& o : overrides) {
    if (o.first.rfind("agro.", 0) == 0) agro_only.push_back(o);
  }
  for (const auto& [k, v] : agro_only) set_agro(cfg.agro, normalize_key(k.substr(5)), scalar_node(v));
  validate(cfg.agro);
  cfg.crop = load_crop(cfg.agro.crop_name, cfg.agro.crop_variety);
  cfg.site = load_site(cfg.agro.site_name, cfg.agro.site_variation);
  return apply_overrides_impl(std::move(cfg), overrides, false);
}

ResolvedConfig apply_overrides(const ResolvedConfig& base, const std::vector<Override>& overrides) {
  return apply_overrides_impl(base, overrides, true);
}

ResolvedConfig load_agro_config(const std::filesystem::path& path,
                                const std::vector<Override>& overrides) {
  const YAML::Node root = load_yaml_file(path);
  const auto base_dir = path.parent_path();
  if (root.IsMap() && root["agro"]) {
    // Run snapshot: parameters are embedded, the catalog is not consulted.
    ResolvedConfig cfg;
    cfg.agro = parse_agro(root["agro"], path.string());
    resolve_weather_path(cfg.agro, base_dir);
    const YAML::Node crop = root["crop"];
    const YAML::Node site = root["site"];
    if (!crop || !site) throw ValidationError(path.string() + ": snapshot needs crop and site");
    cfg.crop.name = crop["name"].as<std::string>();
    cfg.crop.variety = crop["variety"].as<std::string>();
    cfg.crop.phenology.perennial = crop["kind"].as<std::string>() == "perennial";
    read_all(crop_params(), cfg.crop, crop["parameters"], "crop " + cfg.crop.name);
    cfg.site.name = site["name"].as<std::string>();
    cfg.site.variation = site["variation"].as<std::string>();
    read_all(site_params(), cfg.site, site["parameters"], "site " + cfg.site.name);
    std::vector<Override> recorded;
    if (root["overrides"]) {
      for (const auto& o : root["overrides"]) recorded.push_back(parse_override(o.as<std::string>()));
    }
    cfg = apply_overrides_impl(std::move(cfg), recorded, false);
    return apply_overrides_impl(std::move(cfg), overrides, true);
  }
  AgroConfig agro = parse_agro(root, path.string());
  resolve_weather_path(agro, base_dir);
  return resolve_config(agro, overrides);
}

double get_parameter(const ResolvedConfig& cfg, const std::string& path) {
  ResolvedConfig copy = cfg;
  const auto dot = path.find('.');
  const std::string scope = path.substr(0, dot);
  const std::string name = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (scope == "crop") {
    const auto* p = find_param(crop_params(), name);
    if (p && p->kind == Kind::Real) return *p->real(copy.crop);
  } else if (scope == "site") {
    const auto* p = find_param(site_params(), name);
    if (p && p->kind == Kind::Real) return *p->real(copy.site);
  }
  throw ValidationError("not a real-valued parameter: '" + path + "'");
}

void set_parameter(ResolvedConfig& cfg, const std::string& path, double value) {
  const auto dot = path.find('.');
  const std::string scope = path.substr(0, dot);
  const std::string name = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (scope == "crop") {
    const auto* p = find_param(crop_params(), name);
    if (p && p->kind == Kind::Real) {
      *p->real(cfg.crop) = value;
      return;
    }
  } else if (scope == "site") {
    const auto* p = find_param(site_params(), name);
    if (p && p->kind == Kind::Real) {
      *p->real(cfg.site) = value;
      return;
    }
  }
  throw ValidationError("not a real-valued parameter: '" + path + "'");
}

std::string run_config_yaml(const ResolvedConfig& cfg) {
  YAML::Node root(YAML::NodeType::Map);
  root["agro"] = agro_node(cfg.agro);
  YAML::Node crop(YAML::NodeType::Map);
  crop["name"] = cfg.crop.name;
  crop["variety"] = cfg.crop.variety;
  crop["kind"] = cfg.crop.perennial() ? "perennial" : "annual";
  crop["parameters"] = write_all(crop_params(), cfg.crop);
  root["crop"] = crop;
  YAML::Node site(YAML::NodeType::Map);
  site["name"] = cfg.site.name;
  site["variation"] = cfg.site.variation;
  site["parameters"] = write_all(site_params(), cfg.site);
  root["site"] = site;
  YAML::Node ov(YAML::NodeType::Sequence);
  for (const auto& o : cfg.overrides) ov.push_back(o);
  root["overrides"] = ov;
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

std::filesystem::path dump_run_config(const ResolvedConfig& cfg,
                                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto path = out_dir / "run_config.yaml";
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << run_config_yaml(cfg);
  if (!out) throw RuntimeError("failed writing " + path.string());
  return path;
}

}  // namespace agrosim
