#pragma once

// Isometrically embedded model manifolds: the circle S^1_r in R^2, the sphere
// S^2_r in R^3 and the flat Clifford torus S^1_{r1} x S^1_{r2} in R^4.
//
// Points are built only through EmbeddedManifold::embed, which wraps periodic
// parameters to their fundamental domain, so two points are equal iff their
// stored parameters are equal.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chernoff_heat/errors.hpp"

namespace chernoff_heat {

enum class ManifoldKind { circle, sphere, torus };

inline std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::torus: return "torus";
  }
  return "unknown";
}

struct ParameterInterval {
  double lo;
  double hi;
  bool periodic;
};

class EmbeddedManifold;

class ManifoldPoint {
 public:
  static constexpr std::size_t kMaxIntrinsic = 2;
  static constexpr std::size_t kMaxAmbient = 4;

  std::span<const double> params() const { return {params_.data(), dim_}; }
  std::span<const double> ambient() const { return {ambient_.data(), ambient_dim_}; }
  const double* ambient_data() const { return ambient_.data(); }

  ManifoldKind kind() const { return kind_; }
  const std::array<double, 2>& radii() const { return radii_; }

  friend bool operator==(const ManifoldPoint& a, const ManifoldPoint& b) {
    return a.kind_ == b.kind_ && a.radii_ == b.radii_ && a.params_ == b.params_;
  }

 private:
  friend class EmbeddedManifold;
  ManifoldPoint() = default;

  std::array<double, kMaxIntrinsic> params_{};
  std::array<double, kMaxAmbient> ambient_{};
  std::size_t dim_ = 0;
  std::size_t ambient_dim_ = 0;
  ManifoldKind kind_ = ManifoldKind::circle;
  std::array<double, 2> radii_{};
};

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double wrap_angle(double a) {
  double w = a - kTwoPi * std::floor(a / kTwoPi);
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Shortest angular separation in [0, pi] between two angles in [0, 2pi).
/// Minimizes over the lattice translates k in {-1, 0, 1}.
inline double circle_angle_gap(double a, double b) {
  const double diff = a - b;
  double best = std::abs(diff);
  best = std::min(best, std::abs(diff + kTwoPi));
  best = std::min(best, std::abs(diff - kTwoPi));
  return best;
}

/// Signed separation in (-pi, pi].
inline double circle_signed_gap(double a, double b) {
  double diff = a - b;
  if (diff > std::numbers::pi) diff -= kTwoPi;
  if (diff <= -std::numbers::pi) diff += kTwoPi;
  return diff;
}

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite value");
  }
}

}  // namespace detail

class EmbeddedManifold {
 public:
  static EmbeddedManifold circle(double r = 1.0) { return EmbeddedManifold(ManifoldKind::circle, r, r); }
  static EmbeddedManifold sphere(double r = 1.0) { return EmbeddedManifold(ManifoldKind::sphere, r, r); }
  static EmbeddedManifold torus(double r1 = 1.0, double r2 = 1.0) {
    return EmbeddedManifold(ManifoldKind::torus, r1, r2);
  }

  /// Selects a manifold by its CLI name. An empty radius list means unit radii;
  /// a single radius is shared by both torus factors.
  static EmbeddedManifold from_name(std::string_view name, std::span<const double> radii = {}) {
    const double r1 = radii.empty() ? 1.0 : radii[0];
    const double r2 = radii.size() > 1 ? radii[1] : r1;
    if (name == "circle" || name == "sphere") {
      if (radii.size() > 1) throw InvalidArgument(std::string(name) + " takes a single radius");
      return name == "circle" ? circle(r1) : sphere(r1);
    }
    if (name == "torus") {
      if (radii.size() > 2) throw InvalidArgument("torus takes at most two radii");
      return torus(r1, r2);
    }
    throw InvalidArgument("unknown manifold '" + std::string(name) + "'");
  }

  ManifoldKind kind() const { return kind_; }
  std::string_view name() const { return to_string(kind_); }
  int intrinsic_dim() const { return kind_ == ManifoldKind::circle ? 1 : 2; }
  int ambient_dim() const {
    switch (kind_) {
      case ManifoldKind::circle: return 2;
      case ManifoldKind::sphere: return 3;
      case ManifoldKind::torus: return 4;
    }
    return 0;
  }
  const std::array<double, 2>& radii() const { return radii_; }
  double radius() const { return radii_[0]; }

  double total_volume() const {
    using std::numbers::pi;
    switch (kind_) {
      case ManifoldKind::circle: return 2.0 * pi * radii_[0];
      case ManifoldKind::sphere: return 4.0 * pi * radii_[0] * radii_[0];
      case ManifoldKind::torus: return 4.0 * pi * pi * radii_[0] * radii_[1];
    }
    return 0.0;
  }

  std::span<const ParameterInterval> parameter_domain() const {
    return {domain_.data(), static_cast<std::size_t>(intrinsic_dim())};
  }

  ManifoldPoint embed(std::span<const double> params) const {
    if (params.size() != static_cast<std::size_t>(intrinsic_dim())) {
      throw InvalidArgument("embed: expected " + std::to_string(intrinsic_dim()) + " parameters, got " +
                            std::to_string(params.size()));
    }
    detail::require_finite(params, "embed");

    ManifoldPoint p;
    p.kind_ = kind_;
    p.radii_ = radii_;
    p.dim_ = params.size();
    p.ambient_dim_ = static_cast<std::size_t>(ambient_dim());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& iv = domain_[i];
      double v = params[i];
      if (iv.periodic) {
        v = detail::wrap_angle(v);
      } else if (v < iv.lo || v > iv.hi) {
        throw InvalidArgument("embed: parameter " + std::to_string(i) + " outside [" + std::to_string(iv.lo) +
                              ", " + std::to_string(iv.hi) + "]");
      }
      p.params_[i] = v;
    }

    const double r1 = radii_[0];
    const double r2 = radii_[1];
    auto& a = p.ambient_;
    switch (kind_) {
      case ManifoldKind::circle:
        a[0] = r1 * std::cos(p.params_[0]);
        a[1] = r1 * std::sin(p.params_[0]);
        break;
      case ManifoldKind::sphere: {
        const double st = std::sin(p.params_[0]);
        a[0] = r1 * st * std::cos(p.params_[1]);
        a[1] = r1 * st * std::sin(p.params_[1]);
        a[2] = r1 * std::cos(p.params_[0]);
        break;
      }
      case ManifoldKind::torus:
        a[0] = r1 * std::cos(p.params_[0]);
        a[1] = r1 * std::sin(p.params_[0]);
        a[2] = r2 * std::cos(p.params_[1]);
        a[3] = r2 * std::sin(p.params_[1]);
        break;
    }
    return p;
  }

  ManifoldPoint embed(std::initializer_list<double> params) const {
    return embed(std::span<const double>(params.begin(), params.size()));
  }

  bool owns(const ManifoldPoint& x) const { return x.kind() == kind_ && x.radii() == radii_; }

  double geodesic_distance(const ManifoldPoint& x, const ManifoldPoint& y) const {
    require_same(x, y);
    const auto px = x.params();
    const auto py = y.params();
    switch (kind_) {
      case ManifoldKind::circle:
        return radii_[0] * detail::circle_angle_gap(px[0], py[0]);
      case ManifoldKind::sphere: {
        const double* a = x.ambient_data();
        const double* b = y.ambient_data();
        const double cx = a[1] * b[2] - a[2] * b[1];
        const double cy = a[2] * b[0] - a[0] * b[2];
        const double cz = a[0] * b[1] - a[1] * b[0];
        const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
        const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        return radii_[0] * std::atan2(cross, dot);
      }
      case ManifoldKind::torus: {
        const double d1 = radii_[0] * detail::circle_angle_gap(px[0], py[0]);
        const double d2 = radii_[1] * detail::circle_angle_gap(px[1], py[1]);
        return std::hypot(d1, d2);
      }
    }
    return 0.0;
  }

  double chordal_distance(const ManifoldPoint& x, const ManifoldPoint& y) const {
    require_same(x, y);
    return std::sqrt(chordal_distance_sq(x.ambient_data(), y.ambient_data()));
  }

  /// |a - b|^2 on raw ambient coordinates; no ownership checks.
  double chordal_distance_sq(const double* a, const double* b) const {
    double s = 0.0;
    for (int i = 0; i < ambient_dim(); ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return s;
  }

  double scalar_curvature(const ManifoldPoint& x) const {
    require_owned(x);
    return kind_ == ManifoldKind::sphere ? 2.0 / (radii_[0] * radii_[0]) : 0.0;
  }

  /// Bi-Laplacian of y -> |x - y|^2 at y = x, taken in Riemannian normal
  /// coordinates centred at x. Constant on these homogeneous spaces.
  double chordal_biharmonic(const ManifoldPoint& x) const {
    require_owned(x);
    return chordal_biharmonic_;
  }

  friend bool operator==(const EmbeddedManifold& a, const EmbeddedManifold& b) {
    return a.kind_ == b.kind_ && a.radii_ == b.radii_;
  }

 private:
  EmbeddedManifold(ManifoldKind kind, double r1, double r2) : kind_(kind), radii_{r1, r2} {
    if (!(std::isfinite(r1) && r1 > 0.0 && std::isfinite(r2) && r2 > 0.0)) {
      throw InvalidArgument("manifold radii must be positive and finite");
    }
    using std::numbers::pi;
    switch (kind_) {
      case ManifoldKind::circle:
        domain_ = {ParameterInterval{0.0, 2.0 * pi, true}, ParameterInterval{}};
        // |x - y|^2 = 2 r^2 (1 - cos(s/r)) = s^2 - s^4 / (12 r^2) + ...
        chordal_biharmonic_ = -2.0 / (r1 * r1);
        break;
      case ManifoldKind::sphere:
        domain_ = {ParameterInterval{0.0, pi, false}, ParameterInterval{0.0, 2.0 * pi, true}};
        // same radial profile; the flat 2-d bi-Laplacian of rho^4 is 64
        chordal_biharmonic_ = -16.0 / (3.0 * r1 * r1);
        break;
      case ManifoldKind::torus:
        domain_ = {ParameterInterval{0.0, 2.0 * pi, true}, ParameterInterval{0.0, 2.0 * pi, true}};
        chordal_biharmonic_ = -2.0 / (r1 * r1) - 2.0 / (r2 * r2);
        break;
    }
  }

  void require_owned(const ManifoldPoint& x) const {
    if (!owns(x)) throw InvalidArgument("point does not belong to this " + std::string(name()));
  }
  void require_same(const ManifoldPoint& x, const ManifoldPoint& y) const {
    require_owned(x);
    require_owned(y);
  }

  ManifoldKind kind_;
  std::array<double, 2> radii_;
  std::array<ParameterInterval, 2> domain_{};
  double chordal_biharmonic_ = 0.0;
};

}  // namespace chernoff_heat
