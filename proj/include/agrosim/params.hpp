#pragma once

#include <string>

#include "agrosim/canopy.hpp"
#include "agrosim/phenology.hpp"
#include "agrosim/soil.hpp"
#include "agrosim/weather.hpp"

namespace agrosim {

/// Everything a crop file defines, after the variety overlay.
struct CropParams {
  std::string name;
  std::string variety;
  PhenologyParams phenology;  // phenology.perennial distinguishes the crop kind
  CanopyParams canopy;
  Npk demand{0.02, 0.003, 0.015};  // kg nutrient per kg new dry matter
  OrganArray initial_weight{};     // kg/ha at simulation start
  double leaf_flush = 0.0;         // kg/ha of leaves put out at dormancy release
  bool start_dormant = false;
  double initial_age = 0.0;        // years

  bool perennial() const { return phenology.perennial; }
  friend bool operator==(const CropParams&, const CropParams&) = default;
};

/// Everything a site file defines, after the variation overlay.
struct SiteSpec {
  std::string name;
  std::string variation;
  SiteParams params;
  double sm_init = 0.3;
  Npk surface_init{};
  Npk subsoil_init{40.0, 10.0, 40.0};
  SynthWeatherParams synth;

  friend bool operator==(const SiteSpec&, const SiteSpec&) = default;
};

void validate(const CropParams& c);
void validate(const SiteSpec& s);

}  // namespace agrosim
