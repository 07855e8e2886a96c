#pragma once

// Time partitions and the iterated kernel
//
//   q_P(x, y) = int dx_1 q(x, x_1, t_1) int dx_2 q(x_1, x_2, t_2 - t_1) ... q(x_{n-1}, y, t_n - t_{n-1})
//
// discretized as the weighted product Q(D_1) W Q(D_2) W ... W Q(D_n), with W
// the diagonal of quadrature weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chernoff_heat/errors.hpp"
#include "chernoff_heat/kernels.hpp"
#include "chernoff_heat/quadrature.hpp"

namespace chernoff_heat {

class Partition {
 public:
  explicit Partition(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw InvalidArgument("partition needs at least two time points");
    if (times_.front() != 0.0) throw InvalidArgument("partition must start at t_0 = 0");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!std::isfinite(times_[i]) || !(times_[i] > times_[i - 1])) {
        throw InvalidArgument("partition times must be finite and strictly increasing (index " + std::to_string(i) +
                              ")");
      }
    }
  }

  const std::vector<double>& times() const { return times_; }
  /// Number of steps n.
  std::size_t size() const { return times_.size() - 1; }
  double final_time() const { return times_.back(); }
  double step(std::size_t i) const { return times_[i + 1] - times_[i]; }

  std::vector<double> steps() const {
    std::vector<double> s(size());
    for (std::size_t i = 0; i < size(); ++i) s[i] = step(i);
    return s;
  }

  double mesh() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, step(i));
    return m;
  }

  double min_gap() const {
    double m = step(0);
    for (std::size_t i = 1; i < size(); ++i) m = std::min(m, step(i));
    return m;
  }

  double last_step() const { return step(size() - 1); }

  /// Mesh of the partition with the final point removed; 0 when n = 1.
  double mesh_without_last() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < size(); ++i) m = std::max(m, step(i));
    return m;
  }

  /// min_i (t_i - t_{i-1}) > |P|^k
  bool satisfies_min_gap(double k) const { return min_gap() > std::pow(mesh(), k); }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<double> times_;
};

inline Partition uniform_partition(double t, int n) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("uniform_partition: t must be positive");
  if (n < 1) throw InvalidArgument("uniform_partition: n must be >= 1");
  std::vector<double> times(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) times[static_cast<std::size_t>(i)] = t * i / n;
  times.back() = t;
  return Partition(std::move(times));
}

/// Sorted uniform draws on (0, t), redrawn until min gap > mesh^k.
inline Partition random_min_gap_partition(double t, int n, int k, std::uint64_t seed, int max_attempts = 10'000) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("random_min_gap_partition: t must be positive");
  if (n < 1) throw InvalidArgument("random_min_gap_partition: n must be >= 1");
  if (k < 2) throw InvalidArgument("random_min_gap_partition: k must be >= 2");
  if (n == 1) return Partition({0.0, t});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, t);
  std::vector<double> times(static_cast<std::size_t>(n) + 1);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    times.front() = 0.0;
    times.back() = t;
    for (int i = 1; i < n; ++i) times[static_cast<std::size_t>(i)] = u(rng);
    std::sort(times.begin() + 1, times.end() - 1);
    bool strict = true;
    double mesh = 0.0;
    double gap = t;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double d = times[i] - times[i - 1];
      strict = strict && d > 0.0;
      mesh = std::max(mesh, d);
      gap = std::min(gap, d);
    }
    if (strict && gap > std::pow(mesh, k)) return Partition(times);
  }
  throw InfeasibleError("random_min_gap_partition: no partition with min_gap > mesh^" + std::to_string(k) +
                        " found for n = " + std::to_string(n) + " in " + std::to_string(max_attempts) + " attempts");
}

/// Last-step length tau = delta^{1/(d+10)} for a requested mesh bound delta.
inline double dominant_last_step(double delta, int d) { return std::pow(delta, 1.0 / (d + 10)); }

/// Uniform steps of size <= delta on [0, t - tau] followed by one step tau,
/// so tau^{d+9} > delta >= mesh of the earlier steps.
inline Partition dominant_last_step_partition(double t, double delta, int d) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("dominant_last_step_partition: t must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("dominant_last_step_partition: delta must be positive");
  if (d < 1) throw InvalidArgument("dominant_last_step_partition: d must be >= 1");
  const double tau = dominant_last_step(delta, d);
  if (!(tau < t)) {
    throw InvalidArgument("dominant_last_step_partition: delta = " + std::to_string(delta) + " gives tau = " +
                          std::to_string(tau) + " >= t = " + std::to_string(t));
  }
  const double head = t - tau;
  const auto m = static_cast<std::size_t>(std::ceil(head / delta));
  std::vector<double> times(m + 2);
  for (std::size_t i = 0; i <= m; ++i) times[i] = head * static_cast<double>(i) / static_cast<double>(m);
  times[m] = head;
  times[m + 1] = t;
  return Partition(std::move(times));
}

/// Hypothesis of the dominant-last-step construction: tau^{d+9} > |P \ {t_n}|.
inline bool dominant_last_step_holds(const Partition& p, int d) {
  return std::pow(p.last_step(), d + 9) > p.mesh_without_last();
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

/// (A o B)[i][j] = sum_l A[i][l] w_l B[l][j]. B must hold every row.
inline KernelMatrix compose(const KernelMatrix& a, const KernelMatrix& b) {
  if (a.quadrature_ptr() != b.quadrature_ptr()) throw InvalidArgument("compose: matrices live on different grids");
  if (!b.is_full()) throw InvalidArgument("compose: right factor must hold every row");
  Eigen::MatrixXd out = (a.values() * a.quadrature().weight_vector().asDiagonal()) * b.values();
  return KernelMatrix(std::move(out), a.quadrature_ptr(), a.rows(), a.time() + b.time(), KernelKind::CHAIN);
}

struct ChainResult {
  KernelMatrix matrix;
  Partition partition;
  std::optional<double> sup_error_vs_h;
};

namespace detail {

inline bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

/// Groups steps equal to rounding; returns for each step the index of its group.
inline std::vector<std::size_t> step_groups(const std::vector<double>& steps, std::vector<double>& group_steps) {
  std::vector<std::size_t> group(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::size_t g = 0;
    while (g < group_steps.size() && !same_step(group_steps[g], steps[i])) ++g;
    if (g == group_steps.size()) group_steps.push_back(steps[i]);
    group[i] = g;
  }
  return group;
}

inline void require_chain_bandwidth(const Partition& p, const Quadrature& quad, const BandwidthGuard& guard) {
  const auto steps = p.steps();
  const auto it = std::min_element(steps.begin(), steps.end());
  const auto idx = static_cast<std::size_t>(it - steps.begin());
  require_bandwidth(quad, *it, guard, "compose_chain step " + std::to_string(idx + 1) + " (dt = " + std::to_string(*it) + ")");
}

/// acc (W Q)^power, by sequential products when acc has few rows and by
/// binary powering of the N x N factor otherwise.
inline Eigen::MatrixXd times_power(Eigen::MatrixXd acc, const Eigen::MatrixXd& wq, std::size_t power) {
  if (power == 0) return acc;
  const double rows = static_cast<double>(acc.rows());
  const double n = static_cast<double>(wq.rows());
  const double p = static_cast<double>(power);
  if (p * rows <= (std::log2(p) + 1.0) * n) {
    for (std::size_t i = 0; i < power; ++i) acc = acc * wq;
    return acc;
  }
  Eigen::MatrixXd base = wq;
  while (true) {
    if (power & 1u) acc = acc * base;
    power >>= 1u;
    if (power == 0) break;
    base = base * base;
  }
  return acc;
}

}  // namespace detail

/// Rows `rows` of q_P. The first factor is restricted to the requested rows;
/// each following run of equal steps is applied as a power of W Q. The order
/// of operations depends only on the partition, so results are reproducible.
inline KernelMatrix compose_chain_rows(const Partition& p, const QuadraturePtr& quad, const RowSelection& rows,
                                       const BandwidthGuard& guard = {}) {
  if (!quad) throw InvalidArgument("compose_chain: null quadrature");
  detail::require_chain_bandwidth(p, *quad, guard);

  const auto steps = p.steps();
  std::vector<double> group_steps;
  const auto group = detail::step_groups(steps, group_steps);
  const auto& w = quad->weight_vector();

  KernelMatrix first = build_kernel_rows(KernelKind::Q, group_steps[group[0]], quad, rows, {}, guard);
  if (p.size() == 1) return first;

  Eigen::MatrixXd acc = std::move(first.values());
  std::size_t i = 1;
  while (i < steps.size()) {
    std::size_t j = i;
    while (j < steps.size() && group[j] == group[i]) ++j;
    Eigen::MatrixXd wq = build_kernel_matrix(KernelKind::Q, group_steps[group[i]], quad, {}, guard).values();
    wq.array().colwise() *= w.array();
    acc = detail::times_power(std::move(acc), wq, j - i);
    i = j;
  }
  return KernelMatrix(std::move(acc), quad, rows, p.final_time(), KernelKind::CHAIN);
}

inline ChainResult compose_chain(const Partition& p, const QuadraturePtr& quad, const BandwidthGuard& guard = {}) {
  if (!quad) throw InvalidArgument("compose_chain: null quadrature");
  return ChainResult{compose_chain_rows(p, quad, quad->all_rows(), guard), p, std::nullopt};
}

/// (C W f) for a grid function or a block of grid functions (one per column).
inline Eigen::MatrixXd apply_chain(const KernelMatrix& chain, const Eigen::MatrixXd& f) {
  if (f.rows() != chain.quadrature().size()) {
    throw InvalidArgument("apply_chain: grid function has " + std::to_string(f.rows()) + " samples, grid has " +
                          std::to_string(chain.quadrature().size()));
  }
  return chain.values() * (chain.quadrature().weight_vector().asDiagonal() * f);
}

inline Eigen::MatrixXd apply_chain(const ChainResult& chain, const Eigen::MatrixXd& f) {
  return apply_chain(chain.matrix, f);
}

/// Q(D_1) W (Q(D_2) W (... Q(D_n) W f)): the factors applied one at a time.
inline Eigen::MatrixXd apply_steps(const Partition& p, const QuadraturePtr& quad, Eigen::MatrixXd f,
                                   const BandwidthGuard& guard = {}) {
  if (!quad) throw InvalidArgument("apply_steps: null quadrature");
  if (f.rows() != quad->size()) throw InvalidArgument("apply_steps: grid function has wrong length");
  detail::require_chain_bandwidth(p, *quad, guard);
  const auto steps = p.steps();
  for (std::size_t i = steps.size(); i-- > 0;) {
    const auto q = build_kernel_matrix(KernelKind::Q, steps[i], quad, {}, guard);
    f = q.values() * (quad->weight_vector().asDiagonal() * f);
  }
  return f;
}

}  // namespace chernoff_heat
