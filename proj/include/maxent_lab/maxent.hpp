#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/rational.hpp"

namespace maxent_lab {

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }
inline double bits_to_nats(double bits) { return bits * std::numbers::ln2; }

enum class HullPosition { interior, boundary, outside };

namespace detail {

/// Dense exact simplex (Bland's rule) for: max c.x s.t. A x = b, x >= 0.
/// Returns nullopt when infeasible. The caller guarantees boundedness.
inline std::optional<Rational> simplex_max(std::vector<std::vector<Rational>> a, std::vector<Rational> b,
                                           const std::vector<Rational>& c) {
  const std::size_t m = a.size();
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0) {
      for (auto& v : a[i]) v = -v;
      b[i] = -b[i];
    }
  }
  // Columns: n originals, m artificials, rhs.
  const std::size_t cols = n + m;
  std::vector<std::vector<Rational>> t(m, std::vector<Rational>(cols + 1, 0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1;
    t[i][cols] = b[i];
    basis[i] = n + i;
  }

  auto pivot = [&](std::size_t row, std::size_t col) {
    Rational p = t[row][col];
    for (auto& v : t[row]) v /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row || t[i][col] == 0) continue;
      Rational f = t[i][col];
      for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
  };

  // Maximizes obj.x over the current tableau, using only columns < allowed.
  auto run = [&](const std::vector<Rational>& obj, std::size_t allowed) {
    while (true) {
      std::optional<std::size_t> entering;
      for (std::size_t j = 0; j < allowed && !entering; ++j) {
        Rational reduced = obj[j];
        for (std::size_t i = 0; i < m; ++i) reduced -= obj[basis[i]] * t[i][j];
        if (reduced > 0) entering = j;
      }
      if (!entering) return;
      std::optional<std::size_t> leaving;
      Rational best;
      for (std::size_t i = 0; i < m; ++i) {
        if (t[i][*entering] <= 0) continue;
        Rational ratio = t[i][cols] / t[i][*entering];
        if (!leaving || ratio < best || (ratio == best && basis[i] < basis[*leaving])) {
          leaving = i;
          best = ratio;
        }
      }
      if (!leaving) throw Error(ErrorCode::invalid_input, "unbounded hull program");
      pivot(*leaving, *entering);
    }
  };

  std::vector<Rational> phase1(cols, 0);
  for (std::size_t i = 0; i < m; ++i) phase1[n + i] = -1;
  run(phase1, cols);
  Rational infeasibility = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n) infeasibility += t[i][cols];
  if (infeasibility > 0) return std::nullopt;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (t[i][j] != 0) {
        pivot(i, j);
        break;
      }
    }
  }
  std::vector<Rational> phase2(cols, 0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
  run(phase2, n);
  Rational value = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) value += c[basis[i]] * t[i][cols];
  return value;
}

}  // namespace detail

/// Locates the target relative to the convex hull of the statistic values, exactly.
/// Interior means the target is a convex combination with all weights strictly positive.
inline HullPosition hull_position(const ConstraintSpec& c) {
  // lambda_x = mu_x + s with mu, s >= 0; maximize s.
  const std::size_t outcomes = c.outcomes();
  std::vector<std::vector<Rational>> a(c.dim + 1, std::vector<Rational>(outcomes + 1, 0));
  std::vector<Rational> b(c.dim + 1, 0);
  for (std::size_t j = 0; j < c.dim; ++j) {
    Rational sum = 0;
    for (std::size_t x = 0; x < outcomes; ++x) {
      a[j][x] = c.values[x][j];
      sum += c.values[x][j];
    }
    a[j][outcomes] = sum;
    b[j] = c.target[j];
  }
  for (std::size_t x = 0; x < outcomes; ++x) a[c.dim][x] = 1;
  a[c.dim][outcomes] = static_cast<int>(outcomes);
  b[c.dim] = 1;
  std::vector<Rational> objective(outcomes + 1, 0);
  objective[outcomes] = 1;
  auto best = detail::simplex_max(std::move(a), std::move(b), objective);
  if (!best) return HullPosition::outside;
  return *best > 0 ? HullPosition::interior : HullPosition::boundary;
}

/// I-projection of the prior onto {P : E_P[T] = t}, in exponential form.
struct MaxEntSolution {
  Eigen::VectorXd beta;
  double log_partition = 0;  // ln Z(beta)
  std::vector<double> pmf;
  std::vector<double> prior;
  Eigen::MatrixXd covariance;
  double entropy_bits = 0;  // H_q(p) = -D(p||q), bits
  double residual = 0;
  int iterations = 0;
  /// Dual objective F(beta) - F(start) before each accepted step and at termination.
  std::vector<double> dual_trace;
  /// F change of each accepted step, computed directly rather than by differencing.
  std::vector<double> dual_steps;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  std::optional<Eigen::VectorXd> start;
};

namespace detail {

struct TiltedMoments {
  std::vector<double> mass;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double log_partition = 0;  // ln Z(beta)
};

inline TiltedMoments tilt(const SampleSpace& space, const ConstraintSpec& c, const Eigen::VectorXd& beta) {
  const std::size_t outcomes = c.outcomes();
  std::vector<double> exponent(outcomes);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < outcomes; ++x) {
    double e = std::log(space.prior_mass[x]);
    for (std::size_t j = 0; j < c.dim; ++j) e -= beta[static_cast<Eigen::Index>(j)] * c.values_f[x][j];
    exponent[x] = e;
    top = std::max(top, e);
  }
  double total = 0;
  for (double e : exponent) total += std::exp(e - top);
  TiltedMoments out;
  out.log_partition = top + std::log(total);
  out.mass.resize(outcomes);
  const auto k = static_cast<Eigen::Index>(c.dim);
  out.mean = Eigen::VectorXd::Zero(k);
  for (std::size_t x = 0; x < outcomes; ++x) {
    out.mass[x] = std::exp(exponent[x] - out.log_partition);
    for (Eigen::Index j = 0; j < k; ++j) out.mean[j] += out.mass[x] * c.values_f[x][static_cast<std::size_t>(j)];
  }
  out.cov = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t x = 0; x < outcomes; ++x) {
    Eigen::VectorXd d(k);
    for (Eigen::Index j = 0; j < k; ++j) d[j] = c.values_f[x][static_cast<std::size_t>(j)] - out.mean[j];
    out.cov += out.mass[x] * d * d.transpose();
  }
  return out;
}

inline Eigen::VectorXd target_vector(const ConstraintSpec& c) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(c.dim));
  for (std::size_t j = 0; j < c.dim; ++j) t[static_cast<Eigen::Index>(j)] = c.target_f[j];
  return t;
}

/// F(beta + step) - F(beta) computed from the tilted masses at beta without cancellation.
inline double dual_change(const TiltedMoments& at, const ConstraintSpec& c, const Eigen::VectorXd& step) {
  double acc = 0;
  for (std::size_t x = 0; x < c.outcomes(); ++x) {
    double e = 0;
    for (std::size_t j = 0; j < c.dim; ++j)
      e -= step[static_cast<Eigen::Index>(j)] * (c.values_f[x][j] - c.target_f[j]);
    acc += at.mass[x] * std::expm1(e);
  }
  return std::log1p(acc);
}

inline double condition_number(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace detail

/// Strictly convex dual F(beta) = ln Z(beta) + beta . t.
inline double dual_objective(const SampleSpace& space, const ConstraintSpec& c, const Eigen::VectorXd& beta) {
  return detail::tilt(space, c, beta).log_partition + beta.dot(detail::target_vector(c));
}

/// Gradient t - E_beta[T] of the dual.
inline Eigen::VectorXd dual_gradient(const SampleSpace& space, const ConstraintSpec& c, const Eigen::VectorXd& beta) {
  return detail::target_vector(c) - detail::tilt(space, c, beta).mean;
}

inline constexpr double kSingularCondition = 1e12;

inline MaxEntSolution solve_maxent(const SampleSpace& space, const ConstraintSpec& c, const SolveOptions& options = {}) {
  if (space.size() != c.outcomes()) throw Error(ErrorCode::invalid_input, "constraint and sample space disagree");
  switch (hull_position(c)) {
    case HullPosition::outside:
      throw Error(ErrorCode::target_outside_hull, "no distribution on the outcomes has the requested mean");
    case HullPosition::boundary:
      throw Error(ErrorCode::boundary_target,
                  "target lies on the boundary of the convex hull; restrict the sample space to the face");
    case HullPosition::interior: break;
  }
  const auto k = static_cast<Eigen::Index>(c.dim);
  const Eigen::VectorXd t = detail::target_vector(c);
  Eigen::VectorXd beta = options.start ? *options.start : Eigen::VectorXd::Zero(k);
  if (beta.size() != k) throw Error(ErrorCode::invalid_input, "start vector has wrong dimension");

  MaxEntSolution sol;
  double dual_offset = 0;  // F(beta) - F(start), accumulated from exact step changes
  int iter = 0;
  for (;; ++iter) {
    auto moments = detail::tilt(space, c, beta);
    Eigen::VectorXd gradient = t - moments.mean;
    double residual = gradient.lpNorm<Eigen::Infinity>();
    sol.dual_trace.push_back(dual_offset);
    if (detail::condition_number(moments.cov) > kSingularCondition)
      throw Error(ErrorCode::singular_covariance,
                  "covariance matrix is numerically singular; some coordinates are affine combinations of others");
    if (residual <= options.tol) {
      sol.beta = beta;
      sol.log_partition = moments.log_partition;
      sol.pmf = moments.mass;
      sol.covariance = moments.cov;
      sol.residual = residual;
      break;
    }
    if (iter >= options.max_iter)
      throw Error(ErrorCode::no_convergence, "moment residual " + std::to_string(residual) + " after " +
                                                 std::to_string(iter) + " iterations");
    Eigen::VectorXd step = -moments.cov.ldlt().solve(gradient);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      double change = detail::dual_change(moments, c, scale * step);
      if (change < 0) {
        beta += scale * step;
        dual_offset += change;
        sol.dual_steps.push_back(change);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw Error(ErrorCode::no_convergence, "line search stalled at residual " + std::to_string(residual));
  }
  sol.iterations = iter;
  sol.prior = space.prior_mass;
  double entropy = 0;
  for (std::size_t x = 0; x < sol.pmf.size(); ++x)
    if (sol.pmf[x] > 0) entropy -= sol.pmf[x] * std::log2(sol.pmf[x] / sol.prior[x]);
  sol.entropy_bits = entropy;
  return sol;
}

/// T-covariance matrix under the solution's mass function.
inline Eigen::MatrixXd covariance(const MaxEntSolution& sol, const ConstraintSpec& c) {
  const auto k = static_cast<Eigen::Index>(c.dim);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (std::size_t x = 0; x < sol.pmf.size(); ++x)
    for (Eigen::Index j = 0; j < k; ++j) mean[j] += sol.pmf[x] * c.values_f[x][static_cast<std::size_t>(j)];
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t x = 0; x < sol.pmf.size(); ++x) {
    Eigen::VectorXd d(k);
    for (Eigen::Index j = 0; j < k; ++j) d[j] = c.values_f[x][static_cast<std::size_t>(j)] - mean[j];
    cov += sol.pmf[x] * d * d.transpose();
  }
  return cov;
}

/// -sum p log2(p/q).
inline double entropy_bits(const MaxEntSolution& sol) { return sol.entropy_bits; }

/// (beta . t + ln Z(beta)) / ln 2; agrees with the sum form at the optimum.
inline double entropy_bits_closed_form(const MaxEntSolution& sol, const ConstraintSpec& c) {
  return nats_to_bits(sol.beta.dot(detail::target_vector(c)) + sol.log_partition);
}

}  // namespace maxent_lab
