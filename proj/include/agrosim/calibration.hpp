#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agrosim/phenology.hpp"
#include "agrosim/weather.hpp"

namespace agrosim {

// ---------------------------------------------------------------------------
// Gaussian process regression on [0,1]^d with an RBF kernel.
//
// Targets are standardized (sample mean, sample variance with n-1; unit
// variance when n = 1 or the targets are constant), so the kernel has unit
// signal variance in standardized units and `noise` is a standard deviation
// in those units. Jitter is added to the diagonal and grown tenfold until the
// Cholesky factorization succeeds.

struct GpHyper {
  double lengthscale = 0.2;
  double noise = 1e-6;
  double jitter = 1e-8;
};

struct GpPrediction {
  double mean = 0.0;
  double std = 0.0;
};

struct GpPosterior {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  GpHyper hyper;
  double prior_mean = 0.0;
  double signal_variance = 1.0;  // original units
  double jitter_used = 0.0;
  std::vector<double> chol;      // n×n lower factor, row-major
  std::vector<double> alpha;     // K⁻¹ z for standardized targets z
};

double rbf_correlation(std::span<const double> a, std::span<const double> b, double lengthscale);

GpPosterior gp_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   const GpHyper& hyper = {});
GpPrediction gp_predict(const GpPosterior& gp, std::span<const double> x);

double normal_pdf(double z);
double normal_cdf(double z);

/// Expected improvement for minimization; max(best - mean, 0) when std = 0.
double expected_improvement(double mean, double std, double best);
double expected_improvement(const GpPosterior& gp, std::span<const double> x, double best);

/// EI over many candidates. Both variants return identical vectors.
std::vector<double> score_ei_serial(std::span<const double> means, std::span<const double> stds,
                                    double best);
std::vector<double> score_ei_parallel(std::span<const double> means,
                                      std::span<const double> stds, double best);

/// GP whose Cholesky factor grows by one row per added point. Predictions
/// agree with gp_fit on the same data.
class IncrementalGp {
 public:
  IncrementalGp(std::size_t dim, const GpHyper& hyper, std::size_t capacity = 0);
  ~IncrementalGp();
  IncrementalGp(IncrementalGp&&) noexcept;
  IncrementalGp& operator=(IncrementalGp&&) noexcept;

  void add(std::span<const double> x, double y);
  void set_target(std::size_t i, double y);
  std::size_t size() const;
  double jitter_used() const;

  GpPrediction predict(std::span<const double> x) const;

  /// Fixed candidate pool whose cross-covariances are extended with each point.
  void set_pool(const std::vector<std::vector<double>>& pool);
  void predict_pool(std::vector<double>& means, std::vector<double>& stds) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Bayesian optimization over a box.

using Bounds = std::vector<std::pair<double, double>>;

struct BoOptions {
  int iters = 500;
  int n_init = 10;
  int n_candidates = 1024;
  int n_local = 64;       // perturbations of the incumbent per iteration
  GpHyper hyper;
  bool parallel = false;  // OpenMP for initial evaluations and EI scoring
};

struct BoResult {
  std::vector<double> x;     // best point, original units
  double best = 0.0;
  std::vector<double> trace; // best-so-far after every evaluation
  std::vector<std::vector<double>> evaluated;
  std::vector<double> losses;  // non-finite losses recorded as +inf
};

using LossFn = std::function<double(std::span<const double>)>;

BoResult bo_minimize(const LossFn& loss, const Bounds& bounds, std::uint64_t seed,
                     const BoOptions& options = {});

// ---------------------------------------------------------------------------
// Stage-wise phenology calibration.

struct PhenologyObservation {
  int year = 0;
  std::string weather;  // table path, or "synthetic:SEED:LATITUDE"
  std::optional<int> bud_break, bloom, veraison;

  std::optional<int> onset(GrapeStage s) const;
  friend bool operator==(const PhenologyObservation&, const PhenologyObservation&) = default;
};

struct PhenologyDataset {
  std::string cultivar;
  std::vector<PhenologyObservation> years;
  friend bool operator==(const PhenologyDataset&, const PhenologyDataset&) = default;
};

void validate(const PhenologyDataset& d);

/// CSV with header cultivar,year,weather_file,doy_budbreak,doy_bloom,doy_veraison;
/// blank onset cells mean "not observed". Relative weather paths resolve against the file.
PhenologyDataset load_phenology_dataset(const std::filesystem::path& path);
void write_phenology_dataset(const PhenologyDataset& d, const std::filesystem::path& path);

/// Weather for every year of a dataset, loaded once. Years sharing a weather
/// reference are simulated as one continuous run from 1 January of the first.
class PreparedDataset {
 public:
  explicit PreparedDataset(const PhenologyDataset& d);
  const PhenologyDataset& dataset() const { return dataset_; }
  /// Predicted onsets aligned with dataset().years.
  std::vector<StageOnsets> predict(const PhenologyParams& p) const;

 private:
  struct Group {
    WeatherSeries series;
    std::vector<std::size_t> rows;
  };
  PhenologyDataset dataset_;
  std::vector<Group> groups_;
};

inline constexpr std::array<GrapeStage, 3> kCalibrationStages = {
    GrapeStage::BudBreak, GrapeStage::Bloom, GrapeStage::Veraison};

/// Parameters optimized at each stage.
const std::vector<std::string>& stage_parameters(GrapeStage s);

double get_phenology_parameter(const PhenologyParams& p, const std::string& name);
void set_phenology_parameter(PhenologyParams& p, const std::string& name, double value);

/// sqrt(mean sq. error at stage k + mean sq. error at stage k-1), over years
/// observing both; bud break uses its own term only.
double rmse_loss(const std::vector<StageOnsets>& predicted, const PhenologyDataset& d,
                 GrapeStage stage);
/// Stage-only RMSE over years observing the stage.
double stage_rmse(const std::vector<StageOnsets>& predicted, const PhenologyDataset& d,
                  GrapeStage stage);

struct StageFit {
  GrapeStage stage = GrapeStage::BudBreak;
  std::vector<std::string> names;
  std::vector<double> values;
  double loss = 0.0;
  double rmse = 0.0;
  std::vector<double> trace;
  int evaluations = 0;
};

struct CalibrationResult {
  std::string cultivar;
  PhenologyParams params;
  std::array<StageFit, 3> stages;
  int evaluations = 0;
};

using ParamBounds = std::map<std::string, std::pair<double, double>>;

/// Reasonable grape ranges; disjoint where ordering invariants apply.
ParamBounds default_grape_bounds();

CalibrationResult calibrate_cultivar(const PhenologyDataset& d, const PhenologyParams& initial,
                                     const ParamBounds& bounds, std::uint64_t seed,
                                     const BoOptions& options = {});

std::string calibration_yaml(const CalibrationResult& r);

}  // namespace agrosim
