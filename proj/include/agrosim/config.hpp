#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "agrosim/params.hpp"
#include "agrosim/soil.hpp"

namespace agrosim {

/// The agromanagement file: exactly these fourteen entries.
struct AgroConfig {
  std::string crop_name;
  std::string crop_variety;
  std::string site_name;
  std::string site_variation;
  double latitude = 0.0;
  double longitude = 0.0;
  int year = 2020;
  std::string sow_date = "01-01";  // MM-DD
  int max_duration_days = 365;
  int n_seasons = 1;
  std::string weather_source = "synthetic";  // file path or "synthetic"
  LimitationMode limitation_mode = LimitationMode::LNPKW;
  int step_interval_days = 1;
  std::uint64_t random_seed = 0;

  friend bool operator==(const AgroConfig&, const AgroConfig&) = default;
};

/// Names of the fourteen agromanagement keys in file order.
const std::vector<std::string>& agro_keys();

/// Crop, site and agromanagement resolved into one immutable bundle.
struct ResolvedConfig {
  AgroConfig agro;
  CropParams crop;
  SiteSpec site;
  std::vector<std::string> overrides;  // "key=value" as applied

  friend bool operator==(const ResolvedConfig&, const ResolvedConfig&) = default;
};

using Override = std::pair<std::string, std::string>;

/// Parses "dotted.key=value".
Override parse_override(const std::string& text);

/// Directory holding crops/ and sites/. AGROSIM_DATA_DIR overrides the built-in path.
std::filesystem::path data_dir();

/// Loads an agromanagement file (or a run snapshot), resolves crop and site
/// files from the data directory, applies overrides in order, re-validates.
///
/// Override keys are `agro.<entry>`, `crop.<PARAM>` or `site.<PARAM>`;
/// hyphens in agro entries are accepted as underscores.
ResolvedConfig load_agro_config(const std::filesystem::path& path,
                                const std::vector<Override>& overrides = {});

/// Same, starting from an in-memory AgroConfig.
ResolvedConfig resolve_config(const AgroConfig& agro, const std::vector<Override>& overrides = {});

/// Applies further overrides to a resolved bundle.
ResolvedConfig apply_overrides(const ResolvedConfig& base, const std::vector<Override>& overrides);

/// Numeric parameter access by dotted path (crop.* / site.* scalars only).
double get_parameter(const ResolvedConfig& cfg, const std::string& path);
void set_parameter(ResolvedConfig& cfg, const std::string& path, double value);

/// Writes `run_config.yaml` into out_dir; loading it reproduces the bundle.
std::filesystem::path dump_run_config(const ResolvedConfig& cfg,
                                      const std::filesystem::path& out_dir);
std::string run_config_yaml(const ResolvedConfig& cfg);

void validate(const AgroConfig& agro);
void validate(const ResolvedConfig& cfg);

struct CropInfo {
  std::string name;
  bool perennial = false;
  std::vector<std::string> varieties;
};

std::vector<CropInfo> list_crops();
std::vector<std::string> list_sites();

CropParams load_crop(const std::string& name, const std::string& variety);
SiteSpec load_site(const std::string& name, const std::string& variation);

}  // namespace agrosim
