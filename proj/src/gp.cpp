#include "agrosim/calibration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "agrosim/error.hpp"

namespace agrosim {

namespace {

constexpr double kMaxJitter = 1e-2;

struct Standardizer {
  double mean = 0.0;
  double variance = 1.0;
};

Standardizer standardize(std::span<const double> y) {
  Standardizer s;
  const auto n = static_cast<double>(y.size());
  for (double v : y) s.mean += v;
  s.mean /= n;
  if (y.size() > 1) {
    double ss = 0.0;
    for (double v : y) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / (n - 1.0);
  }
  if (!(s.variance > 0.0) || !std::isfinite(s.variance)) s.variance = 1.0;
  return s;
}

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> correlation_matrix(
    const std::vector<std::vector<double>>& x, double ell) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> k(n, n);
  const T scale = T(2) * ell * ell;
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = T(1);
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& a = x[static_cast<std::size_t>(i)];
      const auto& b = x[static_cast<std::size_t>(j)];
      T d2 = 0;
      for (std::size_t c = 0; c < a.size(); ++c) d2 += (T(a[c]) - b[c]) * (T(a[c]) - b[c]);
      k(i, j) = k(j, i) = std::exp(-d2 / scale);
    }
  }
  return k;
}

/// Lower Cholesky factor of r + (noise² + jitter)·I, growing jitter until it succeeds.
template <class M>
M factor(const M& r, const GpHyper& h, double& jitter) {
  jitter = h.jitter;
  while (true) {
    M k = r;
    k.diagonal().array() += static_cast<typename M::Scalar>(h.noise * h.noise + jitter);
    Eigen::LLT<M> llt(k);
    if (llt.info() == Eigen::Success) {
      M l = llt.matrixL();
      if ((l.diagonal().array() > 0.0).all() && l.allFinite()) return l;
    }
    jitter *= 10.0;
    if (jitter > kMaxJitter) throw RuntimeError("GP covariance is not positive definite");
  }
}

}  // namespace

double rbf_correlation(std::span<const double> a, std::span<const double> b, double lengthscale) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-d2 / (2.0 * lengthscale * lengthscale));
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double std, double best) {
  if (!(std > 0.0)) return std::max(best - mean, 0.0);
  const double z = (best - mean) / std;
  return std::max(0.0, (best - mean) * normal_cdf(z) + std * normal_pdf(z));
}

GpPosterior gp_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   const GpHyper& hyper) {
  if (x.empty()) throw ValidationError("GP needs at least one training point");
  if (x.size() != y.size()) throw ValidationError("GP inputs and targets differ in length");
  for (const auto& row : x) {
    if (row.size() != x.front().size()) throw ValidationError("GP inputs differ in dimension");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("GP targets must be finite");
  }
  if (!(hyper.lengthscale > 0.0) || !(hyper.noise >= 0.0) || !(hyper.jitter > 0.0)) {
    throw ValidationError("GP hyperparameters must be positive");
  }
  GpPosterior gp;
  gp.inputs = x;
  gp.targets = y;
  gp.hyper = hyper;
  const Standardizer s = standardize(y);
  gp.prior_mean = s.mean;
  gp.signal_variance = s.variance;

  // Fitted in extended precision: near-duplicate inputs make the covariance
  // badly conditioned, and rounding in its entries alone would move the mean.
  const auto n = static_cast<Eigen::Index>(x.size());
  const LMatrix l = factor(correlation_matrix<long double>(x, hyper.lengthscale), hyper, gp.jitter_used);
  LVector z(n);
  const long double sd = std::sqrt(static_cast<long double>(s.variance));
  for (Eigen::Index i = 0; i < n; ++i) z(i) = (y[static_cast<std::size_t>(i)] - static_cast<long double>(s.mean)) / sd;
  const LVector alpha = l.transpose().triangularView<Eigen::Upper>().solve(
      l.triangularView<Eigen::Lower>().solve(z));

  gp.chol.resize(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gp.chol[static_cast<std::size_t>(i * n + j)] = static_cast<double>(l(i, j));
    }
  }
  gp.alpha.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) gp.alpha[static_cast<std::size_t>(i)] = static_cast<double>(alpha(i));
  return gp;
}

GpPrediction gp_predict(const GpPosterior& gp, std::span<const double> x) {
  const auto n = static_cast<Eigen::Index>(gp.inputs.size());
  if (x.size() != gp.inputs.front().size()) throw ValidationError("GP query has wrong dimension");
  Vector k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = rbf_correlation(gp.inputs[static_cast<std::size_t>(i)], x, gp.hyper.lengthscale);
  }
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> l(
      gp.chol.data(), n, n);
  const Eigen::Map<const Vector> alpha(gp.alpha.data(), n);
  const Vector v = l.triangularView<Eigen::Lower>().solve(k);
  const double sd = std::sqrt(gp.signal_variance);
  GpPrediction p;
  long double dot = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) dot += static_cast<long double>(k(i)) * alpha(i);
  p.mean = gp.prior_mean + sd * static_cast<double>(dot);
  p.std = sd * std::sqrt(std::max(0.0, 1.0 - v.squaredNorm()));
  return p;
}

double expected_improvement(const GpPosterior& gp, std::span<const double> x, double best) {
  const GpPrediction p = gp_predict(gp, x);
  return expected_improvement(p.mean, p.std, best);
}

std::vector<double> score_ei_serial(std::span<const double> means, std::span<const double> stds,
                                    double best) {
  std::vector<double> out(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) out[i] = expected_improvement(means[i], stds[i], best);
  return out;
}

std::vector<double> score_ei_parallel(std::span<const double> means,
                                      std::span<const double> stds, double best) {
  std::vector<double> out(means.size());
  const auto n = static_cast<std::ptrdiff_t>(means.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = expected_improvement(means[u], stds[u], best);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct IncrementalGp::Impl {
  std::size_t dim;
  GpHyper hyper;
  double jitter;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  Matrix l;   // capacity × capacity, lower factor in the top-left n×n block
  // Candidate pool: cross-correlations, L⁻¹ times them, and their squared column norms.
  std::vector<std::vector<double>> pool;
  Matrix kc, vc;
  Vector q;

  mutable bool alpha_dirty = true;
  mutable Vector alpha;
  mutable Standardizer stdz;

  Eigen::Index n() const { return static_cast<Eigen::Index>(x.size()); }

  void reserve(Eigen::Index rows) {
    if (rows <= l.rows()) return;
    const Eigen::Index cap = std::max<Eigen::Index>(rows, 2 * l.rows());
    l.conservativeResize(cap, cap);
    if (!pool.empty()) {
      kc.conservativeResize(cap, kc.cols());
      vc.conservativeResize(cap, vc.cols());
    }
  }

  void refactor() {
    const Eigen::Index m = n();
    const Matrix lf = factor(correlation_matrix<double>(x, hyper.lengthscale), hyper, jitter);
    l.topLeftCorner(m, m) = lf;
    if (!pool.empty()) rebuild_pool();
  }

  void rebuild_pool() {
    const Eigen::Index m = n();
    const auto c = static_cast<Eigen::Index>(pool.size());
    if (m == 0) {
      q = Vector::Zero(c);
      return;
    }
    vc.topRows(m) = l.topLeftCorner(m, m).triangularView<Eigen::Lower>().solve(kc.topRows(m));
    q = vc.topRows(m).colwise().squaredNorm().transpose();
  }

  void ensure_alpha() const {
    if (!alpha_dirty) return;
    stdz = standardize(y);
    const Eigen::Index m = n();
    Vector z(m);
    const double sd = std::sqrt(stdz.variance);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = (y[static_cast<std::size_t>(i)] - stdz.mean) / sd;
    const auto lv = l.topLeftCorner(m, m);
    alpha = lv.transpose().triangularView<Eigen::Upper>().solve(lv.triangularView<Eigen::Lower>().solve(z));
    alpha_dirty = false;
  }
};

IncrementalGp::IncrementalGp(std::size_t dim, const GpHyper& hyper, std::size_t capacity)
    : impl_(std::make_unique<Impl>()) {
  impl_->dim = dim;
  impl_->hyper = hyper;
  impl_->jitter = hyper.jitter;
  const auto cap = static_cast<Eigen::Index>(std::max<std::size_t>(capacity, 16));
  impl_->l = Matrix::Zero(cap, cap);
}

IncrementalGp::~IncrementalGp() = default;
IncrementalGp::IncrementalGp(IncrementalGp&&) noexcept = default;
IncrementalGp& IncrementalGp::operator=(IncrementalGp&&) noexcept = default;

std::size_t IncrementalGp::size() const { return impl_->x.size(); }
double IncrementalGp::jitter_used() const { return impl_->jitter; }

void IncrementalGp::add(std::span<const double> xs, double y) {
  Impl& s = *impl_;
  if (xs.size() != s.dim) throw ValidationError("GP point has wrong dimension");
  if (!std::isfinite(y)) throw ValidationError("GP targets must be finite");
  const Eigen::Index m = s.n();
  s.reserve(m + 1);
  Vector k(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k(i) = rbf_correlation(s.x[static_cast<std::size_t>(i)], xs, s.hyper.lengthscale);
  }
  s.x.emplace_back(xs.begin(), xs.end());
  s.y.push_back(y);
  s.alpha_dirty = true;
  if (!s.pool.empty()) {
    for (std::size_t c = 0; c < s.pool.size(); ++c) {
      s.kc(m, static_cast<Eigen::Index>(c)) = rbf_correlation(s.pool[c], xs, s.hyper.lengthscale);
    }
  }

  const double diag = 1.0 + s.hyper.noise * s.hyper.noise + s.jitter;
  Vector row = m > 0 ? Vector(s.l.topLeftCorner(m, m).triangularView<Eigen::Lower>().solve(k))
                     : Vector(0);
  const double d = diag - row.squaredNorm();
  if (!(d > 0.5 * (s.hyper.noise * s.hyper.noise + s.jitter))) {
    s.refactor();
    return;
  }
  s.l.row(m).head(m) = row.transpose();
  s.l(m, m) = std::sqrt(d);
  if (!s.pool.empty()) {
    // New row of L⁻¹Kc from the appended factor row.
    const auto c = static_cast<Eigen::Index>(s.pool.size());
    Eigen::RowVectorXd v = s.kc.row(m);
    if (m > 0) v.noalias() -= row.transpose() * s.vc.topRows(m);
    v /= s.l(m, m);
    s.vc.row(m) = v;
    for (Eigen::Index j = 0; j < c; ++j) s.q(j) += v(j) * v(j);
  }
}

void IncrementalGp::set_target(std::size_t i, double y) {
  if (!std::isfinite(y)) throw ValidationError("GP targets must be finite");
  impl_->y.at(i) = y;
  impl_->alpha_dirty = true;
}

GpPrediction IncrementalGp::predict(std::span<const double> xs) const {
  const Impl& s = *impl_;
  const Eigen::Index m = s.n();
  if (m == 0) throw RuntimeError("GP has no training points");
  s.ensure_alpha();
  Vector k(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k(i) = rbf_correlation(s.x[static_cast<std::size_t>(i)], xs, s.hyper.lengthscale);
  }
  const Vector v = s.l.topLeftCorner(m, m).triangularView<Eigen::Lower>().solve(k);
  const double sd = std::sqrt(s.stdz.variance);
  return {s.stdz.mean + sd * k.dot(s.alpha), sd * std::sqrt(std::max(0.0, 1.0 - v.squaredNorm()))};
}

void IncrementalGp::set_pool(const std::vector<std::vector<double>>& pool) {
  Impl& s = *impl_;
  s.pool = pool;
  const auto c = static_cast<Eigen::Index>(pool.size());
  s.kc = Matrix::Zero(s.l.rows(), c);
  s.vc = Matrix::Zero(s.l.rows(), c);
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      s.kc(i, j) = rbf_correlation(s.x[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)],
                                   s.hyper.lengthscale);
    }
  }
  s.rebuild_pool();
}

void IncrementalGp::predict_pool(std::vector<double>& means, std::vector<double>& stds) const {
  const Impl& s = *impl_;
  const Eigen::Index m = s.n();
  if (m == 0) throw RuntimeError("GP has no training points");
  s.ensure_alpha();
  const auto c = static_cast<Eigen::Index>(s.pool.size());
  const Vector mu = s.kc.topRows(m).transpose() * s.alpha;
  const double sd = std::sqrt(s.stdz.variance);
  means.resize(static_cast<std::size_t>(c));
  stds.resize(static_cast<std::size_t>(c));
  for (Eigen::Index j = 0; j < c; ++j) {
    means[static_cast<std::size_t>(j)] = s.stdz.mean + sd * mu(j);
    stds[static_cast<std::size_t>(j)] = sd * std::sqrt(std::max(0.0, 1.0 - s.q(j)));
  }
}

}  // namespace agrosim
