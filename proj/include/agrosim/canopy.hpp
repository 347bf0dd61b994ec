#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace agrosim {

enum Organ : std::size_t { kRoots = 0, kStems = 1, kLeaves = 2, kStorage = 3 };
inline constexpr std::size_t kOrganCount = 4;

using OrganArray = std::array<double, kOrganCount>;

/// Dry matter per organ in kg/ha. Yield is the storage pool.
struct OrganPools {
  OrganArray weight{};
  double lai = 0.0;

  double roots() const { return weight[kRoots]; }
  double stems() const { return weight[kStems]; }
  double leaves() const { return weight[kLeaves]; }
  double storage() const { return weight[kStorage]; }
  double total() const { return weight[0] + weight[1] + weight[2] + weight[3]; }

  friend bool operator==(const OrganPools&, const OrganPools&) = default;
};

/// One knot of a piecewise-linear table over development stage.
struct DvsKnot {
  double dvs = 0.0;
  OrganArray values{};
  friend bool operator==(const DvsKnot&, const DvsKnot&) = default;
};

struct CanopyParams {
  double eps = 20.0;    // kg/ha dry matter per MJ/m² intercepted
  double k_ext = 0.6;   // light extinction coefficient
  double sla = 20.0;    // m² leaf per kg leaf
  double q10 = 2.0;
  OrganArray maint{0.01, 0.01, 0.02, 0.005};  // 1/day at 25 °C
  std::vector<DvsKnot> part_table;   // fractions per organ, sum 1 at each knot
  std::vector<DvsKnot> death_table;  // relative death rate per organ, 1/day
  double a_age = 0.0;   // respiration increase per year of age
  double b_age = 0.0;   // conversion-efficiency decrease per year of age

  friend bool operator==(const CanopyParams&, const CanopyParams&) = default;
};

inline constexpr double kEfficiencyFloor = 0.2;
inline constexpr double kRespirationCap = 3.0;

void validate(const CanopyParams& p);

/// Linear interpolation, clamped beyond the end knots.
OrganArray interpolate(const std::vector<DvsKnot>& table, double dvs);

/// m²/m² from leaf weight (kg/ha) and SLA (m²/kg).
double leaf_area_index(double leaves, double sla);

double age_efficiency_factor(double age, const CanopyParams& p);
double age_respiration_factor(double age, const CanopyParams& p);

/// Gross daily assimilation, kg/ha.
double daily_assimilation(double lai, double irradiation, double stress, double age,
                          const CanopyParams& p);

/// Daily maintenance respiration, kg/ha.
double maintenance_respiration(const OrganPools& organs, double t_avg, double age,
                               const CanopyParams& p);

/// Per-organ increments (may be negative when net < 0).
///
/// Positive net is split by the partition table at dvs. With excess surface
/// nutrients the storage share is halved and the rest split evenly between
/// stems and leaves. Negative net drains storage, then leaves, never below zero.
OrganArray partition_growth(double net, double dvs, bool surface_excess,
                            const OrganPools& organs, const CanopyParams& p);

/// Applies relative death rates at dvs. A perennial entering dormancy drops its
/// leaves and storage organs; roots and stems carry over.
OrganPools apply_death_rates(const OrganPools& organs, double dvs, bool is_perennial,
                             bool entering_dormancy, const CanopyParams& p);

}  // namespace agrosim
