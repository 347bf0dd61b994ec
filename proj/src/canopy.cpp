#include "agrosim/canopy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agrosim/error.hpp"

namespace agrosim {

namespace {

void validate_table(const std::vector<DvsKnot>& t, const char* name, bool fractions) {
  auto fail = [&](const std::string& m) {
    throw ValidationError(std::string("canopy ") + name + ": " + m);
  };
  if (t.empty()) fail("table is empty");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i].dvs)) fail("non-finite dvs knot");
    if (i > 0 && !(t[i].dvs > t[i - 1].dvs)) fail("dvs knots must be strictly increasing");
    double sum = 0.0;
    for (double v : t[i].values) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) fail("values must lie in [0, 1]");
      sum += v;
    }
    if (fractions && std::abs(sum - 1.0) > 1e-9) fail("fractions must sum to 1 at every knot");
  }
}

}  // namespace

void validate(const CanopyParams& p) {
  auto fail = [](const std::string& m) { throw ValidationError("canopy: " + m); };
  if (!(p.eps >= 0.0)) fail("EPS must be >= 0");
  if (!(p.k_ext > 0.0)) fail("KDIF must be > 0");
  if (!(p.sla > 0.0)) fail("SLA must be > 0");
  if (!(p.q10 > 0.0)) fail("Q10 must be > 0");
  for (double m : p.maint) {
    if (!(m >= 0.0)) fail("maintenance coefficients must be >= 0");
  }
  if (!(p.a_age >= 0.0) || !(p.b_age >= 0.0)) fail("age coefficients must be >= 0");
  validate_table(p.part_table, "PART_TABLE", true);
  validate_table(p.death_table, "DEATH_TABLE", false);
}

OrganArray interpolate(const std::vector<DvsKnot>& table, double dvs) {
  if (dvs <= table.front().dvs) return table.front().values;
  if (dvs >= table.back().dvs) return table.back().values;
  const auto hi = std::upper_bound(table.begin(), table.end(), dvs,
                                   [](double x, const DvsKnot& k) { return x < k.dvs; });
  const auto lo = hi - 1;
  const double w = (dvs - lo->dvs) / (hi->dvs - lo->dvs);
  OrganArray out{};
  for (std::size_t o = 0; o < kOrganCount; ++o) {
    out[o] = lo->values[o] + w * (hi->values[o] - lo->values[o]);
  }
  return out;
}

double leaf_area_index(double leaves, double sla) { return sla * leaves / 10000.0; }

double age_efficiency_factor(double age, const CanopyParams& p) {
  return std::max(kEfficiencyFloor, 1.0 - p.b_age * age);
}

double age_respiration_factor(double age, const CanopyParams& p) {
  return std::min(kRespirationCap, 1.0 + p.a_age * age);
}

double daily_assimilation(double lai, double irradiation, double stress, double age,
                          const CanopyParams& p) {
  const double interception = 1.0 - std::exp(-p.k_ext * lai);
  return p.eps * age_efficiency_factor(age, p) * irradiation * interception * stress;
}

double maintenance_respiration(const OrganPools& organs, double t_avg, double age,
                               const CanopyParams& p) {
  double base = 0.0;
  for (std::size_t o = 0; o < kOrganCount; ++o) base += p.maint[o] * organs.weight[o];
  return base * std::pow(p.q10, (t_avg - 25.0) / 10.0) * age_respiration_factor(age, p);
}

OrganArray partition_growth(double net, double dvs, bool surface_excess,
                            const OrganPools& organs, const CanopyParams& p) {
  OrganArray inc{};
  if (net > 0.0) {
    OrganArray f = interpolate(p.part_table, dvs);
    if (surface_excess) {
      const double moved = 0.5 * f[kStorage];
      f[kStorage] -= moved;
      f[kStems] += 0.5 * moved;
      f[kLeaves] += 0.5 * moved;
    }
    for (std::size_t o = 0; o < kOrganCount; ++o) inc[o] = net * f[o];
  } else if (net < 0.0) {
    double deficit = -net;
    const double from_storage = std::min(deficit, organs.weight[kStorage]);
    inc[kStorage] = -from_storage;
    deficit -= from_storage;
    inc[kLeaves] = -std::min(deficit, organs.weight[kLeaves]);
  }
  return inc;
}

OrganPools apply_death_rates(const OrganPools& organs, double dvs, bool is_perennial,
                             bool entering_dormancy, const CanopyParams& p) {
  OrganPools out = organs;
  const OrganArray rate = interpolate(p.death_table, dvs);
  for (std::size_t o = 0; o < kOrganCount; ++o) out.weight[o] *= 1.0 - rate[o];
  if (is_perennial && entering_dormancy) {
    out.weight[kLeaves] = 0.0;
    out.weight[kStorage] = 0.0;
  }
  out.lai = leaf_area_index(out.weight[kLeaves], p.sla);
  return out;
}

}  // namespace agrosim
