#include "agrosim/params.hpp"

#include <cmath>

#include "agrosim/error.hpp"

namespace agrosim {

void validate(const CropParams& c) {
  validate(c.phenology);
  validate(c.canopy);
  for (double d : c.demand) {
    if (!(d >= 0.0)) throw ValidationError("crop " + c.name + ": nutrient demand must be >= 0");
  }
  for (double w : c.initial_weight) {
    if (!(w >= 0.0)) throw ValidationError("crop " + c.name + ": initial weights must be >= 0");
  }
  if (!(c.leaf_flush >= 0.0)) throw ValidationError("crop " + c.name + ": LEAF_FLUSH must be >= 0");
  if (!(c.initial_age >= 0.0)) throw ValidationError("crop " + c.name + ": AGE_INIT must be >= 0");
  if (!c.perennial() && c.start_dormant) {
    throw ValidationError("crop " + c.name + ": annual crops cannot start dormant");
  }
}

void validate(const SiteSpec& s) {
  validate(s.params);
  if (!(s.sm_init >= 0.0 && s.sm_init <= s.params.porosity)) {
    throw ValidationError("site " + s.name + ": SM_INIT must lie in [0, SM0]");
  }
  for (std::size_t e = 0; e < kNutrientCount; ++e) {
    if (!(s.surface_init[e] >= 0.0) || !(s.subsoil_init[e] >= 0.0)) {
      throw ValidationError("site " + s.name + ": initial nutrient pools must be >= 0");
    }
  }
  const auto& w = s.synth;
  if (!(w.t_noise >= 0.0 && w.range_min >= 0.0 && w.range_min <= w.range_max &&
        w.rain_probability >= 0.0 && w.rain_probability <= 1.0 && w.rain_mean >= 0.0 &&
        w.wind_min >= 0.0 && w.wind_min <= w.wind_max && w.t_amplitude >= 0.0)) {
    throw ValidationError("site " + s.name + ": invalid synthetic weather constants");
  }
}

}  // namespace agrosim
