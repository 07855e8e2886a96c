#pragma once

// The four kernels compared throughout the library, all with variance-t
// scaling so that the reference semigroup is exp(-t Delta_M / 2):
//
//   q(x,y,t) = exp(-|x-y|^2 / 2t) / Z(x,t),   Z(x,t) = int_M exp(-|x-y|^2 / 2t) dy
//   p(x,y,t) = (2 pi t)^{-d/2} exp(-|x-y|^2 / 2t)
//   E(x,y,t) = (2 pi t)^{-d/2} exp(-dist(x,y)^2 / 2t)
//   h(x,y,t) = heat kernel, from exact series on the model manifolds
//
// Z is always evaluated with the quadrature the kernel lives on, which makes
// Q rows stochastic under the quadrature weights to rounding.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chernoff_heat/errors.hpp"
#include "chernoff_heat/manifold.hpp"
#include "chernoff_heat/parallel.hpp"
#include "chernoff_heat/quadrature.hpp"

namespace chernoff_heat {

struct HeatSeriesParams {
  double truncation_tolerance = 1e-14;
  int max_terms = 2000;
  /// Circle only: below this time the wrapped Gaussian is summed, above it
  /// the Fourier series. NaN selects L^2 / (2 pi).
  double representation_switch_time = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    if (!(truncation_tolerance > 0.0) || !std::isfinite(truncation_tolerance)) {
      throw InvalidArgument("truncation_tolerance must be positive");
    }
    if (max_terms < 1) throw InvalidArgument("max_terms must be >= 1");
    if (!std::isnan(representation_switch_time) && !(representation_switch_time > 0.0)) {
      throw InvalidArgument("representation_switch_time must be positive");
    }
  }
};

enum class KernelKind { Q, P, E, H, CHAIN };

inline std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Q: return "Q";
    case KernelKind::P: return "P";
    case KernelKind::E: return "E";
    case KernelKind::H: return "H";
    case KernelKind::CHAIN: return "CHAIN";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(std::string_view s) {
  if (s == "Q" || s == "q") return KernelKind::Q;
  if (s == "P" || s == "p") return KernelKind::P;
  if (s == "E" || s == "e") return KernelKind::E;
  if (s == "H" || s == "h") return KernelKind::H;
  throw InvalidArgument("unknown kernel kind '" + std::string(s) + "' (expected Q, P, E or H)");
}

namespace detail {

inline void require_positive_time(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument(std::string(what) + ": t must be positive and finite");
}

inline double gaussian_prefactor(double t, int d) { return std::pow(2.0 * std::numbers::pi * t, -0.5 * d); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Reference heat kernels
// ---------------------------------------------------------------------------

/// Circle of circumference L, signed arc separation s: sum over lattice
/// translates of the variance-t Gaussian.
inline double circle_heat_wrapped(double s, double t, double L, const HeatSeriesParams& params = {}) {
  detail::require_positive_time(t, "circle_heat_wrapped");
  s = std::remainder(s, L);
  const double pre = detail::gaussian_prefactor(t, 1);
  auto term = [&](int k) {
    const double u = s + k * L;
    return pre * std::exp(-u * u / (2.0 * t));
  };
  const int k_min = static_cast<int>(std::ceil(6.0 * std::sqrt(t) / L)) + 1;
  double sum = term(0);
  for (int k = 1;; ++k) {
    if (k > params.max_terms) {
      throw TruncationError("wrapped-Gaussian series did not reach tolerance within max_terms");
    }
    const double a = term(k);
    const double b = term(-k);
    sum += a + b;
    if (k >= k_min && std::max(a, b) < params.truncation_tolerance) break;
  }
  return sum;
}

/// Circle of circumference L: Fourier series (1/L) sum_n exp(-(2 pi n / L)^2 t / 2) cos(2 pi n s / L).
inline double circle_heat_eigen(double s, double t, double L, const HeatSeriesParams& params = {}) {
  detail::require_positive_time(t, "circle_heat_eigen");
  const double omega = 2.0 * std::numbers::pi / L;
  double sum = 1.0 / L;
  for (int n = 1;; ++n) {
    if (n > params.max_terms) {
      throw TruncationError("circle eigen series did not reach tolerance within max_terms");
    }
    const double coeff = (2.0 / L) * std::exp(-0.5 * (omega * n) * (omega * n) * t);
    if (coeff < params.truncation_tolerance) break;
    sum += coeff * std::cos(omega * n * s);
  }
  return sum;
}

inline double circle_switch_time(double L, const HeatSeriesParams& params) {
  return std::isnan(params.representation_switch_time) ? L * L / (2.0 * std::numbers::pi)
                                                       : params.representation_switch_time;
}

inline double circle_heat(double s, double t, double L, const HeatSeriesParams& params = {}) {
  return t < circle_switch_time(L, params) ? circle_heat_wrapped(s, t, L, params)
                                           : circle_heat_eigen(s, t, L, params);
}

/// Legendre-series coefficients (2l+1)/(4 pi r^2) exp(-l(l+1) t / (2 r^2)) of
/// the sphere heat kernel, cut where a coefficient drops below the tolerance.
/// Since |P_l| <= 1 the cut coefficient bounds each omitted term.
inline std::vector<double> sphere_heat_coefficients(double t, double r, const HeatSeriesParams& params = {}) {
  detail::require_positive_time(t, "sphere_heat");
  std::vector<double> c;
  const double area = 4.0 * std::numbers::pi * r * r;
  for (int l = 0;; ++l) {
    if (l > params.max_terms) {
      throw TruncationError("sphere Legendre series needs more than max_terms = " + std::to_string(params.max_terms) +
                            " terms at t = " + std::to_string(t));
    }
    const double coeff = (2.0 * l + 1.0) / area * std::exp(-l * (l + 1.0) * t / (2.0 * r * r));
    if (l > 0 && coeff < params.truncation_tolerance) break;
    c.push_back(coeff);
  }
  return c;
}

/// Sum of c_l P_l(x) by upward recurrence.
inline double legendre_sum(const std::vector<double>& c, double x) {
  double p0 = 1.0;
  double p1 = x;
  double sum = c[0];
  if (c.size() > 1) sum += c[1] * x;
  for (std::size_t l = 2; l < c.size(); ++l) {
    const double dl = static_cast<double>(l);
    const double p2 = ((2.0 * dl - 1.0) * x * p1 - (dl - 1.0) * p0) / dl;
    sum += c[l] * p2;
    p0 = p1;
    p1 = p2;
  }
  return sum;
}

/// Heat kernel of one manifold at one time, with the series set-up hoisted
/// out of the per-pair evaluation.
class HeatKernel {
 public:
  HeatKernel(const EmbeddedManifold& m, double t, const HeatSeriesParams& params = {})
      : manifold_(m), t_(t), params_(params) {
    detail::require_positive_time(t, "heat_kernel");
    params.validate();
    if (m.kind() == ManifoldKind::sphere) sphere_coeffs_ = sphere_heat_coefficients(t, m.radius(), params);
  }

  double time() const { return t_; }

  double operator()(const ManifoldPoint& x, const ManifoldPoint& y) const {
    if (!manifold_.owns(x) || !manifold_.owns(y)) throw InvalidArgument("heat_kernel: point from another manifold");
    return eval_raw(x, y);
  }

  /// No ownership checks; used in assembly loops.
  double eval_raw(const ManifoldPoint& x, const ManifoldPoint& y) const {
    const auto& r = manifold_.radii();
    switch (manifold_.kind()) {
      case ManifoldKind::circle:
        return circle_factor(x.params()[0], y.params()[0], r[0]);
      case ManifoldKind::sphere: {
        const double* a = x.ambient_data();
        const double* b = y.ambient_data();
        const double c = std::clamp((a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (r[0] * r[0]), -1.0, 1.0);
        return legendre_sum(sphere_coeffs_, c);
      }
      case ManifoldKind::torus:
        return circle_factor(x.params()[0], y.params()[0], r[0]) * circle_factor(x.params()[1], y.params()[1], r[1]);
    }
    return 0.0;
  }

 private:
  double circle_factor(double a, double b, double r) const {
    const double L = detail::kTwoPi * r;
    return circle_heat(r * detail::circle_signed_gap(a, b), t_, L, params_);
  }

  EmbeddedManifold manifold_;
  double t_;
  HeatSeriesParams params_;
  std::vector<double> sphere_coeffs_;
};

inline double heat_kernel(const EmbeddedManifold& m, const ManifoldPoint& x, const ManifoldPoint& y, double t,
                          const HeatSeriesParams& params = {}) {
  return HeatKernel(m, t, params)(x, y);
}

// ---------------------------------------------------------------------------
// Gaussian kernels
// ---------------------------------------------------------------------------

inline double p_kernel(const EmbeddedManifold& m, const ManifoldPoint& x, const ManifoldPoint& y, double t) {
  detail::require_positive_time(t, "p_kernel");
  const double c = m.chordal_distance(x, y);
  return detail::gaussian_prefactor(t, m.intrinsic_dim()) * std::exp(-c * c / (2.0 * t));
}

inline double e_kernel(const EmbeddedManifold& m, const ManifoldPoint& x, const ManifoldPoint& y, double t) {
  detail::require_positive_time(t, "e_kernel");
  const double g = m.geodesic_distance(x, y);
  return detail::gaussian_prefactor(t, m.intrinsic_dim()) * std::exp(-g * g / (2.0 * t));
}

namespace detail {

/// out[j] = exp(-|a - node_j|^2 / 2t); returns sum_j w_j out[j].
inline double gaussian_row(const Quadrature& quad, const double* a, double t, double* out) {
  const auto& amb = quad.ambient();
  const auto& w = quad.weight_vector();
  const int m = static_cast<int>(amb.rows());
  const double inv = 1.0 / (2.0 * t);
  double z = 0.0;
  for (Eigen::Index j = 0; j < amb.cols(); ++j) {
    const double* b = amb.col(j).data();
    double s = 0.0;
    for (int c = 0; c < m; ++c) {
      const double d = a[c] - b[c];
      s += d * d;
    }
    out[j] = std::exp(-s * inv);
    z += w[j] * out[j];
  }
  return z;
}

inline void require_on_grid(const Quadrature& quad, const ManifoldPoint& x, const char* what) {
  if (!quad.manifold().owns(x)) throw InvalidArgument(std::string(what) + ": point from another manifold");
}

}  // namespace detail

inline double normalizer(const ManifoldPoint& x, double t, const Quadrature& quad, const BandwidthGuard& guard = {}) {
  detail::require_positive_time(t, "normalizer");
  detail::require_on_grid(quad, x, "normalizer");
  require_bandwidth(quad, t, guard, "normalizer");
  std::vector<double> row(static_cast<std::size_t>(quad.size()));
  return detail::gaussian_row(quad, x.ambient_data(), t, row.data());
}

inline double q_kernel(const ManifoldPoint& x, const ManifoldPoint& y, double t, const Quadrature& quad,
                       const BandwidthGuard& guard = {}) {
  detail::require_on_grid(quad, y, "q_kernel");
  const double z = normalizer(x, t, quad, guard);
  const double c2 = quad.manifold().chordal_distance_sq(x.ambient_data(), y.ambient_data());
  return std::exp(-c2 / (2.0 * t)) / z;
}

/// (2 pi t)^{-d/2} Z(x,t) - [1 - t (scal(x)/6 + bilap(x)/16)].
inline double normalizer_expansion_residual(const ManifoldPoint& x, double t, const Quadrature& quad,
                                            const BandwidthGuard& guard = {}) {
  const auto& m = quad.manifold();
  const double scaled = detail::gaussian_prefactor(t, m.intrinsic_dim()) * normalizer(x, t, quad, guard);
  const double model = 1.0 - t * (m.scalar_curvature(x) / 6.0 + m.chordal_biharmonic(x) / 16.0);
  return scaled - model;
}

// ---------------------------------------------------------------------------
// Kernel matrices
// ---------------------------------------------------------------------------

/// A kernel sampled on (a subset of rows of) a quadrature grid. Row r of
/// `values` belongs to grid node rows().rows[r]; columns cover every node.
class KernelMatrix {
 public:
  KernelMatrix(Eigen::MatrixXd values, QuadraturePtr quad, RowSelection rows, double time, KernelKind kind)
      : values_(std::move(values)), quad_(std::move(quad)), rows_(std::move(rows)), time_(time), kind_(kind) {
    if (!quad_) throw InvalidArgument("KernelMatrix: null quadrature");
    if (values_.cols() != quad_->size() || values_.rows() != static_cast<Eigen::Index>(rows_.size())) {
      throw InvalidArgument("KernelMatrix: shape does not match quadrature/row selection");
    }
  }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  const Quadrature& quadrature() const { return *quad_; }
  const QuadraturePtr& quadrature_ptr() const { return quad_; }
  const RowSelection& rows() const { return rows_; }
  bool is_full() const { return values_.rows() == quad_->size(); }
  double time() const { return time_; }
  KernelKind kind() const { return kind_; }

  /// Largest |sum_j values(r,j) w_j - 1| over the stored rows.
  double max_row_sum_defect() const {
    const Eigen::VectorXd sums = values_ * quad_->weight_vector();
    return (sums.array() - 1.0).abs().maxCoeff();
  }

 private:
  Eigen::MatrixXd values_;
  QuadraturePtr quad_;
  RowSelection rows_;
  double time_;
  KernelKind kind_;
};

inline KernelMatrix build_kernel_rows(KernelKind kind, double t, const QuadraturePtr& quad, const RowSelection& rows,
                                      const HeatSeriesParams& params = {}, const BandwidthGuard& guard = {}) {
  if (!quad) throw InvalidArgument("build_kernel_rows: null quadrature");
  detail::require_positive_time(t, "build_kernel_matrix");
  if (kind == KernelKind::CHAIN) throw InvalidArgument("build_kernel_matrix: CHAIN matrices come from compose_chain");
  if (kind != KernelKind::H) {
    require_bandwidth(*quad, t, guard, std::string("kernel matrix ") + std::string(to_string(kind)));
  }
  const auto& q = *quad;
  const auto& m = q.manifold();
  const Eigen::Index n = q.size();
  const auto nr = static_cast<Eigen::Index>(rows.size());
  for (auto r : rows.rows) {
    if (r < 0 || r >= n) throw InvalidArgument("build_kernel_rows: row index out of range");
  }
  Eigen::MatrixXd out(nr, n);
  const double pre = detail::gaussian_prefactor(t, m.intrinsic_dim());
  const HeatKernel* heat = nullptr;
  std::optional<HeatKernel> heat_storage;
  if (kind == KernelKind::H) heat = &heat_storage.emplace(m, t, params);

  parallel_for_rows(nr, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    std::vector<double> row(static_cast<std::size_t>(n));
    for (auto r = b; r < e; ++r) {
      const auto& x = q.node(rows.rows[static_cast<std::size_t>(r)]);
      switch (kind) {
        case KernelKind::Q: {
          const double z = detail::gaussian_row(q, x.ambient_data(), t, row.data());
          for (auto& v : row) v /= z;
          break;
        }
        case KernelKind::P:
          detail::gaussian_row(q, x.ambient_data(), t, row.data());
          for (auto& v : row) v *= pre;
          break;
        case KernelKind::E:
          for (Eigen::Index j = 0; j < n; ++j) {
            const double g = m.geodesic_distance(x, q.node(j));
            row[static_cast<std::size_t>(j)] = pre * std::exp(-g * g / (2.0 * t));
          }
          break;
        case KernelKind::H:
          for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = heat->eval_raw(x, q.node(j));
          break;
        case KernelKind::CHAIN:
          break;
      }
      for (Eigen::Index j = 0; j < n; ++j) out(r, j) = row[static_cast<std::size_t>(j)];
    }
  });
  return KernelMatrix(std::move(out), quad, rows, t, kind);
}

inline KernelMatrix build_kernel_matrix(KernelKind kind, double t, const QuadraturePtr& quad,
                                        const HeatSeriesParams& params = {}, const BandwidthGuard& guard = {}) {
  if (!quad) throw InvalidArgument("build_kernel_matrix: null quadrature");
  return build_kernel_rows(kind, t, quad, quad->all_rows(), params, guard);
}

}  // namespace chernoff_heat
