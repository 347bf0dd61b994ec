#include "agrosim/phenology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agrosim/text.hpp"

namespace agrosim {

void validate(const PhenologyParams& p) {
  auto fail = [](const std::string& m) { throw ValidationError("phenology: " + m); };
  const double all[] = {p.tbase, p.chill_req, p.force_bb, p.force_bl, p.force_ve,
                        p.dlcrit, p.tchill_max, p.tsum1, p.tsum2, p.trelease};
  for (double v : all) {
    if (!std::isfinite(v)) fail("non-finite parameter");
  }
  if (!(p.tbase < p.tchill_max)) fail("TBASEM must be below TCHILL_MAX");
  if (!(0.0 < p.force_bb && p.force_bb < p.force_bl && p.force_bl < p.force_ve)) {
    fail("require 0 < FORCE_BB < FORCE_BL < FORCE_VE");
  }
  if (!(p.tsum1 > 0.0 && p.tsum2 > 0.0)) fail("TSUM1 and TSUM2 must be positive");
  if (p.dorm_min < 0) fail("DORM_MIN must be >= 0");
  if (p.stag_max < 1) fail("STAG_MAX must be >= 1");
  if (p.chill_req < 0.0) fail("CHILL_REQ must be >= 0");
}

double PhenologyState::recent_mean() const {
  if (recent_count == 0) return -1e300;
  double s = 0.0;
  for (int i = 0; i < recent_count; ++i) s += recent_tavg[static_cast<std::size_t>(i)];
  return s / recent_count;
}

PhenologyState initial_phenology(bool start_dormant) {
  PhenologyState s;
  s.dormant = start_dormant;
  return s;
}

double dvs_from_tsum(double tsum, const PhenologyParams& p) {
  if (tsum < p.tsum1) return tsum / p.tsum1;
  return std::min(2.0, 1.0 + (tsum - p.tsum1) / p.tsum2);
}

namespace {

void push_recent(PhenologyState& s, double t_avg) {
  s.recent_tavg[static_cast<std::size_t>(s.recent_pos)] = t_avg;
  s.recent_pos = (s.recent_pos + 1) % 7;
  s.recent_count = std::min(7, s.recent_count + 1);
}

void enter_dormancy(PhenologyState& s) {
  s.dormant = true;
  s.dormancy_days = 0;
  s.dvs = 0.0;
  s.tsum = 0.0;
  s.chill = 0.0;
  s.stagnation_days = 0;
}

}  // namespace

PhenologyState step_phenology(const PhenologyState& state, const PhenologyParams& p,
                              const WeatherDay& day, double day_len) {
  PhenologyState s = state;
  push_recent(s, day.t_avg);

  if (s.dormant) {
    s.dormancy_days += 1;
    if (day.t_avg >= 0.0 && day.t_avg <= p.tchill_max) s.chill += 1.0;
    if (s.dormancy_days >= p.dorm_min && s.chill >= p.chill_req &&
        s.recent_mean() > p.trelease) {
      s.dormant = false;
      s.dormancy_days = 0;
      s.dvs = 0.0;
      s.tsum = 0.0;
      s.stagnation_days = 0;
    }
    return s;
  }

  const double increment = std::max(0.0, day.t_avg - p.tbase);
  s.tsum += increment;
  s.dvs = std::max(s.dvs, dvs_from_tsum(s.tsum, p));
  s.stagnation_days = increment > 0.0 ? 0 : s.stagnation_days + 1;

  if (p.perennial) {
    const bool short_days = s.dvs >= 1.0 && day_len < p.dlcrit;
    const bool stagnant = s.stagnation_days >= p.stag_max;
    if (short_days || stagnant) enter_dormancy(s);
  }
  return s;
}

const char* to_string(GrapeStage s) {
  switch (s) {
    case GrapeStage::Dormant: return "Dormant";
    case GrapeStage::BudBreak: return "BudBreak";
    case GrapeStage::Bloom: return "Bloom";
    case GrapeStage::Veraison: return "Veraison";
  }
  return "?";
}

GrapeStage grape_stage(const PhenologyState& s, const PhenologyParams& p) {
  if (s.dormant) return GrapeStage::Dormant;
  if (s.tsum >= p.force_ve) return GrapeStage::Veraison;
  if (s.tsum >= p.force_bl) return GrapeStage::Bloom;
  if (s.tsum >= p.force_bb) return GrapeStage::BudBreak;
  return GrapeStage::Dormant;
}

int StageOnsets::operator[](GrapeStage s) const {
  switch (s) {
    case GrapeStage::BudBreak: return bud_break;
    case GrapeStage::Bloom: return bloom;
    case GrapeStage::Veraison: return veraison;
    case GrapeStage::Dormant: break;
  }
  throw ValidationError("no onset for the dormant stage");
}

std::vector<StageOnsets> predict_stage_onsets(const PhenologyParams& params,
                                              const WeatherSeries& series) {
  if (series.size() < 365 || day_of_year(series.first_date()) != 1) {
    throw ValidationError("stage prediction needs whole calendar years starting 1 January");
  }
  const auto last = series.last_date();
  const auto next = last + std::chrono::days{1};
  if (day_of_year(next) != 1) {
    throw ValidationError("stage prediction needs whole calendar years ending 31 December");
  }

  std::vector<StageOnsets> out;
  PhenologyState state = initial_phenology(true);
  StageOnsets current;
  current.year = year_of(series.first_date());
  for (const auto& day : series.days()) {
    const int year = year_of(day.date);
    if (year != current.year) {
      out.push_back(current);
      current = StageOnsets{};
      current.year = year;
    }
    const int doy = day_of_year(day.date);
    state = step_phenology(state, params, day, day_length(series.latitude(), doy));
    const auto stage = grape_stage(state, params);
    if (stage >= GrapeStage::BudBreak && current.bud_break == kOnsetNotReached) {
      current.bud_break = doy;
    }
    if (stage >= GrapeStage::Bloom && current.bloom == kOnsetNotReached) current.bloom = doy;
    if (stage >= GrapeStage::Veraison && current.veraison == kOnsetNotReached) {
      current.veraison = doy;
    }
  }
  out.push_back(current);
  return out;
}

}  // namespace agrosim
