#pragma once

// Adaptive 4th-order Rosenbrock integration (Shampine's L-stable parameter
// set with an embedded 3rd-order error estimate) for autonomous stiff
// systems x' = f(x), sampled at requested output times. Linear invariants of
// f are conserved to round-off and fixed points of f are fixed points of the
// step map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydyn/errors.hpp"

namespace rydyn {

struct StiffOptions {
  double relative_tolerance = 1e-9;
  double absolute_tolerance = 1e-12;
  double initial_step = 1e-9;
  double min_step = 1e-22;
  std::size_t max_steps = 5'000'000;
  /// Reject steps that push a component below -absolute_tolerance; values in
  /// [-absolute_tolerance, 0) are snapped to 0.
  bool non_negative = true;
};

struct StiffStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t negativity_rejections = 0;
};

/// One Rosenbrock step of size h from x. Writes the new state and the
/// embedded error estimate. `rhs(x, f)` and `jacobian(x, J)` use Eigen types.
template <class Rhs, class Jacobian>
void rosenbrock_step(Rhs& rhs, Jacobian& jacobian, const Eigen::VectorXd& x, double h,
                     Eigen::VectorXd& x_new, Eigen::VectorXd& error) {
  constexpr double gam = 1.0 / 2.0;
  constexpr double a21 = 2.0, a31 = 48.0 / 25.0, a32 = 6.0 / 25.0;
  constexpr double c21 = -8.0, c31 = 372.0 / 25.0, c32 = 12.0 / 5.0;
  constexpr double c41 = -112.0 / 125.0, c42 = -54.0 / 125.0, c43 = -2.0 / 5.0;
  constexpr double b1 = 19.0 / 9.0, b2 = 1.0 / 2.0, b3 = 25.0 / 108.0, b4 = 125.0 / 108.0;
  constexpr double e1 = 17.0 / 54.0, e2 = 7.0 / 36.0, e3 = 0.0, e4 = 125.0 / 108.0;

  const auto n = x.size();
  Eigen::MatrixXd jac(n, n);
  jacobian(x, jac);
  Eigen::MatrixXd a = -jac;
  a.diagonal().array() += 1.0 / (gam * h);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);

  Eigen::VectorXd f(n);
  rhs(x, f);
  const Eigen::VectorXd g1 = lu.solve(f);
  Eigen::VectorXd y = x + a21 * g1;
  rhs(y, f);
  const Eigen::VectorXd g2 = lu.solve(f + c21 * g1 / h);
  y = x + a31 * g1 + a32 * g2;
  rhs(y, f);
  const Eigen::VectorXd g3 = lu.solve(f + (c31 * g1 + c32 * g2) / h);
  const Eigen::VectorXd g4 = lu.solve(f + (c41 * g1 + c42 * g2 + c43 * g3) / h);
  x_new = x + b1 * g1 + b2 * g2 + b3 * g3 + b4 * g4;
  error = e1 * g1 + e2 * g2 + e3 * g3 + e4 * g4;
}

/// Integrates from t = 0, returning the state at each entry of `times`
/// (ascending, >= 0).
template <class Rhs, class Jacobian>
std::vector<Eigen::VectorXd> integrate_stiff(Rhs&& rhs, Jacobian&& jacobian,
                                             const Eigen::VectorXd& initial,
                                             std::span<const double> times,
                                             const StiffOptions& options = {},
                                             StiffStats* stats = nullptr) {
  constexpr double safety = 0.9, grow = 1.5, shrink = 0.5;
  constexpr double grow_exponent = -0.25, shrink_exponent = -1.0 / 3.0;
  constexpr double error_grow_limit = 0.1296;  // (grow / safety)^(1 / grow_exponent)

  const auto n = initial.size();
  Eigen::VectorXd x = initial, x_new(n), error(n);
  StiffStats local;
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(times.size());
  double t = 0.0;
  double h = options.initial_step;
  std::size_t steps = 0;

  for (const double target : times) {
    if (target < t) throw IntegrationError("integrate_stiff: output times must be ascending");
    while (t < target) {
      if (++steps > options.max_steps)
        throw IntegrationError("integrate_stiff: exceeded " + std::to_string(options.max_steps) +
                               " steps at t = " + std::to_string(t));
      if (h < options.min_step)
        throw IntegrationError("integrate_stiff: step size underflow (h = " + std::to_string(h) +
                               ") at t = " + std::to_string(t));
      const bool clipped = t + h >= target;
      const double step = clipped ? target - t : h;
      rosenbrock_step(rhs, jacobian, x, step, x_new, error);

      double err_max = 0.0;
      bool finite = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(x_new[i])) finite = false;
        const double scale = options.absolute_tolerance +
                             options.relative_tolerance * std::max(std::abs(x[i]), std::abs(x_new[i]));
        err_max = std::max(err_max, std::abs(error[i]) / scale);
      }
      if (!finite || err_max > 1.0) {
        ++local.rejected;
        h = finite ? std::max(safety * step * std::pow(err_max, shrink_exponent), shrink * step)
                   : shrink * step;
        continue;
      }
      if (options.non_negative) {
        bool negative = false;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (x_new[i] < -options.absolute_tolerance) {
            negative = true;
            break;
          }
        }
        if (negative) {
          ++local.negativity_rejections;
          h = shrink * step;
          continue;
        }
        x_new = x_new.cwiseMax(0.0);
      }
      ++local.accepted;
      x = x_new;
      t = clipped ? target : t + step;
      const double next = err_max > error_grow_limit ? safety * step * std::pow(err_max, grow_exponent)
                                                     : grow * step;
      // A step clipped to an output time should not shrink the running step.
      h = clipped ? std::max(h, next) : next;
    }
    samples.push_back(x);
  }
  if (stats != nullptr) *stats = local;
  return samples;
}

}  // namespace rydyn
