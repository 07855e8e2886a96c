#pragma once

// Fixed product quadrature rules for the volume measure of the model manifolds.
//
//   circle : N = 2^level uniform nodes, trapezoid weights 2 pi r / N
//   sphere : Gauss-Legendre in cos(theta) (2^level nodes) x uniform phi
//            (2 * 2^level nodes), weights r^2 w_GL (2 pi / N_phi)
//   torus  : 2^level x 2^level uniform product grid
//
// Node ordering is row-major in the parameter grid: index = i0 * n1 + i1.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chernoff_heat/errors.hpp"
#include "chernoff_heat/manifold.hpp"

namespace chernoff_heat {

inline constexpr std::int64_t kMaxQuadratureNodes = 10'000'000;

struct GaussLegendreRule {
  std::vector<double> nodes;    // ascending, in (-1, 1)
  std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre nodes by Newton iteration on P_n from the Tricomi initial guess.
inline GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Rows of a quadrature grid together with how many grid rows each stands for.
/// The grids are invariant under the rotations that permute the uniform
/// angular coordinates, so one row per orbit determines every row-wise sup.
struct RowSelection {
  std::vector<Eigen::Index> rows;
  std::vector<double> multiplicity;

  std::size_t size() const { return rows.size(); }
};

class Quadrature {
 public:
  Quadrature(EmbeddedManifold manifold, int level, std::vector<ManifoldPoint> nodes, std::vector<double> weights,
             double resolution, std::array<int, 2> shape)
      : manifold_(std::move(manifold)),
        level_(level),
        nodes_(std::move(nodes)),
        weights_(std::move(weights)),
        resolution_(resolution),
        shape_(shape) {
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    ambient_.resize(manifold_.ambient_dim(), n);
    weight_vector_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = nodes_[j].ambient();
      for (int c = 0; c < manifold_.ambient_dim(); ++c) ambient_(c, j) = a[c];
      weight_vector_[j] = weights_[j];
    }
  }

  const EmbeddedManifold& manifold() const { return manifold_; }
  int level() const { return level_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(nodes_.size()); }
  const std::vector<ManifoldPoint>& nodes() const { return nodes_; }
  const ManifoldPoint& node(Eigen::Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& weights() const { return weights_; }
  const Eigen::VectorXd& weight_vector() const { return weight_vector_; }
  /// Ambient coordinates, one column per node.
  const Eigen::MatrixXd& ambient() const { return ambient_; }
  /// Largest geodesic gap between neighbouring nodes along either grid direction.
  double resolution() const { return resolution_; }
  /// Grid extents {n0, n1}; n1 == 1 on the circle.
  const std::array<int, 2>& shape() const { return shape_; }

  double integrate(const Eigen::VectorXd& values) const {
    if (values.size() != size()) throw InvalidArgument("integrate: grid function has wrong length");
    return weight_vector_.dot(values);
  }

  RowSelection all_rows() const {
    RowSelection sel;
    sel.rows.resize(nodes_.size());
    sel.multiplicity.assign(nodes_.size(), 1.0);
    for (Eigen::Index i = 0; i < size(); ++i) sel.rows[static_cast<std::size_t>(i)] = i;
    return sel;
  }

  /// One representative row per symmetry orbit: node 0 for the circle and the
  /// torus, the phi = 0 meridian for the sphere.
  RowSelection orbit_representatives() const {
    RowSelection sel;
    switch (manifold_.kind()) {
      case ManifoldKind::circle:
      case ManifoldKind::torus:
        sel.rows = {0};
        sel.multiplicity = {static_cast<double>(size())};
        break;
      case ManifoldKind::sphere:
        for (int i = 0; i < shape_[0]; ++i) {
          sel.rows.push_back(static_cast<Eigen::Index>(i) * shape_[1]);
          sel.multiplicity.push_back(shape_[1]);
        }
        break;
    }
    return sel;
  }

  /// Every row when the grid is small enough, orbit representatives otherwise.
  RowSelection rows_for_sup(Eigen::Index max_full_rows = 4096) const {
    return size() <= max_full_rows ? all_rows() : orbit_representatives();
  }

 private:
  EmbeddedManifold manifold_;
  int level_;
  std::vector<ManifoldPoint> nodes_;
  std::vector<double> weights_;
  double resolution_;
  std::array<int, 2> shape_;
  Eigen::MatrixXd ambient_;
  Eigen::VectorXd weight_vector_;
};

using QuadraturePtr = std::shared_ptr<const Quadrature>;

namespace detail {

inline std::array<std::int64_t, 2> grid_shape(ManifoldKind kind, int level) {
  if (level < 1) throw InvalidArgument("quadrature level must be >= 1");
  if (level > 40) throw ResourceLimitError("quadrature level " + std::to_string(level) + " is too large");
  const std::int64_t base = std::int64_t{1} << level;
  switch (kind) {
    case ManifoldKind::circle: return {base, 1};
    case ManifoldKind::sphere: return {base, 2 * base};
    case ManifoldKind::torus: return {base, base};
  }
  return {0, 0};
}

inline std::int64_t node_count(ManifoldKind kind, int level) {
  const auto s = grid_shape(kind, level);
  if (s[0] > kMaxQuadratureNodes || s[1] > kMaxQuadratureNodes) return kMaxQuadratureNodes + 1;
  return s[0] * s[1];
}

inline double sphere_resolution(double r, const std::vector<double>& theta, int n_phi) {
  double gap = std::max(theta.front(), std::numbers::pi - theta.back());
  double max_sin = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i + 1 < theta.size()) gap = std::max(gap, theta[i + 1] - theta[i]);
    max_sin = std::max(max_sin, std::sin(theta[i]));
  }
  return r * std::max(gap, max_sin * kTwoPi / n_phi);
}

}  // namespace detail

/// Resolution a rule of the given level would have, without building it.
inline double resolution_for_level(const EmbeddedManifold& m, int level) {
  const auto shape = detail::grid_shape(m.kind(), level);
  switch (m.kind()) {
    case ManifoldKind::circle:
      return detail::kTwoPi * m.radius() / static_cast<double>(shape[0]);
    case ManifoldKind::torus:
      return detail::kTwoPi * std::max(m.radii()[0], m.radii()[1]) / static_cast<double>(shape[0]);
    case ManifoldKind::sphere: {
      const auto gl = gauss_legendre(static_cast<int>(shape[0]));
      std::vector<double> theta(gl.nodes.size());
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::acos(gl.nodes[theta.size() - 1 - i]);
      return detail::sphere_resolution(m.radius(), theta, static_cast<int>(shape[1]));
    }
  }
  return 0.0;
}

inline Quadrature build_quadrature(const EmbeddedManifold& m, int level) {
  const std::int64_t count = detail::node_count(m.kind(), level);
  if (count > kMaxQuadratureNodes) {
    throw ResourceLimitError("quadrature level " + std::to_string(level) + " would exceed " +
                             std::to_string(kMaxQuadratureNodes) + " nodes");
  }
  const auto shape = detail::grid_shape(m.kind(), level);
  const int n0 = static_cast<int>(shape[0]);
  const int n1 = static_cast<int>(shape[1]);

  std::vector<ManifoldPoint> nodes;
  std::vector<double> weights;
  nodes.reserve(static_cast<std::size_t>(count));
  weights.reserve(static_cast<std::size_t>(count));
  double resolution = 0.0;

  switch (m.kind()) {
    case ManifoldKind::circle: {
      const double w = detail::kTwoPi * m.radius() / n0;
      for (int i = 0; i < n0; ++i) {
        nodes.push_back(m.embed({detail::kTwoPi * i / n0}));
        weights.push_back(w);
      }
      resolution = w;
      break;
    }
    case ManifoldKind::sphere: {
      const auto gl = gauss_legendre(n0);
      const double r = m.radius();
      const double dphi = detail::kTwoPi / n1;
      std::vector<double> theta(static_cast<std::size_t>(n0));
      // ascending theta: north pole first
      for (int i = 0; i < n0; ++i) {
        const auto src = static_cast<std::size_t>(n0 - 1 - i);
        theta[static_cast<std::size_t>(i)] = std::acos(gl.nodes[src]);
        const double w = r * r * gl.weights[src] * dphi;
        for (int j = 0; j < n1; ++j) {
          nodes.push_back(m.embed({theta[static_cast<std::size_t>(i)], dphi * j}));
          weights.push_back(w);
        }
      }
      resolution = detail::sphere_resolution(r, theta, n1);
      break;
    }
    case ManifoldKind::torus: {
      const double du = detail::kTwoPi / n0;
      const double w = (du * m.radii()[0]) * (du * m.radii()[1]);
      for (int i = 0; i < n0; ++i) {
        for (int j = 0; j < n1; ++j) {
          nodes.push_back(m.embed({du * i, du * j}));
          weights.push_back(w);
        }
      }
      resolution = du * std::max(m.radii()[0], m.radii()[1]);
      break;
    }
  }
  return Quadrature(m, level, std::move(nodes), std::move(weights), resolution, {n0, n1});
}

inline QuadraturePtr make_quadrature(const EmbeddedManifold& m, int level) {
  return std::make_shared<const Quadrature>(build_quadrature(m, level));
}

/// Minimum number of grid spacings per kernel standard deviation sqrt(t).
struct BandwidthGuard {
  double nodes_per_sigma = 4.0;
};

struct BandwidthCheck {
  bool ok = false;
  double resolution = 0.0;
  double required = 0.0;  // largest admissible resolution, sqrt(t_min) / nodes_per_sigma
  int min_level = -1;     // smallest passing level; -1 if none below the node cap
};

inline BandwidthCheck check_bandwidth(const Quadrature& q, double t_min, const BandwidthGuard& guard = {}) {
  if (!(t_min > 0.0) || !std::isfinite(t_min)) throw InvalidArgument("check_bandwidth: t_min must be positive");
  if (!(guard.nodes_per_sigma > 0.0)) throw InvalidArgument("check_bandwidth: nodes_per_sigma must be positive");
  BandwidthCheck out;
  out.resolution = q.resolution();
  out.required = std::sqrt(t_min) / guard.nodes_per_sigma;
  out.ok = out.resolution <= out.required;
  if (out.ok) {
    out.min_level = q.level();
    return out;
  }
  for (int level = q.level() + 1; detail::node_count(q.manifold().kind(), level) <= kMaxQuadratureNodes; ++level) {
    if (resolution_for_level(q.manifold(), level) <= out.required) {
      out.min_level = level;
      break;
    }
  }
  return out;
}

/// Throws ResolutionError naming `what` when the guard fails.
inline void require_bandwidth(const Quadrature& q, double t, const BandwidthGuard& guard, const std::string& what) {
  const auto check = check_bandwidth(q, t, guard);
  if (!check.ok) {
    throw ResolutionError(what + ": grid resolution " + std::to_string(check.resolution) + " exceeds sqrt(" +
                              std::to_string(t) + ")/" + std::to_string(guard.nodes_per_sigma) + " = " +
                              std::to_string(check.required) + "; need level >= " + std::to_string(check.min_level),
                          check.min_level);
  }
}

}  // namespace chernoff_heat
