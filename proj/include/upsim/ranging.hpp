// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "upsim/authsig.hpp"
#include "upsim/geom.hpp"
#include "upsim/timebase.hpp"

namespace upsim::ranging {

/// One station's contribution to a position solve: where the station said
/// it was and how far away it can at most be.
struct RangeObservation {
  geom::Vec station_pos;
  double bound_m = 0.0;
  authsig::StationId station_id{};
};

/// A solved position with its scalar uncertainty.
struct Fix {
  geom::Vec position;
  double error_range_m = 0.0;
  std::vector<double> residuals_m;  ///< signed range residuals at the optimum
  int iterations = 0;
};

/// Upper bound on the distance to a station that emitted at t_s (its own
/// trusted time) given the local receipt time t_m: c * (t_m - t_s). Any
/// interference with the signal in flight can only delay receipt, so the
/// bound only ever grows. Throws FutureTimestampError when t_s > t_m.
double distance_bound(timebase::Instant t_s, timebase::Instant t_m, double c_m_per_s);

struct SolveOptions {
  int max_iterations = 100;
  /// Convergence when the max-abs gradient entry of the half-squared-error
  /// objective drops to gradient_tol * max(1 m, residual norm). The scaling
  /// keeps the test meaningful both for near-exact bounds (absolute 1e-9)
  /// and for wildly inconsistent ones where float noise in meter-scale
  /// residuals dwarfs any absolute threshold.
  double gradient_tol = 1e-9;
  /// Also converged when an accepted step improves the cost by less than
  /// this relative amount, or when no step improves it at all: with large
  /// residuals the Gauss-Newton contraction is linear and double precision
  /// runs out of cost resolution before the gradient test can fire.
  double cost_tol = 1e-12;
  double initial_damping = 1e-3;
  /// Station-geometry gate: condition number of J^T J above this at the
  /// initial point means collinear/coplanar stations.
  double condition_limit = 1e12;
};

/// Sum of squared range residuals of x against the observations.
double objective(std::span<const RangeObservation> obs, const geom::Vec& x);

/// Least-squares position from range bounds: minimizes
/// sum_i (|x - s_i| - d_i)^2 by Gauss-Newton with Levenberg damping
/// (damping x10 on step rejection, /10 on acceptance), initialized at the
/// station centroid. Deterministic: identical inputs give bit-identical
/// fixes.
///
/// Throws UnderdeterminedError (fewer than dims+1 observations),
/// DegenerateGeometryError (collinear/coplanar stations), or
/// NoConvergenceError (iteration budget exhausted).
Fix solve_position(std::span<const RangeObservation> obs, int dims,
                   const SolveOptions& options = {});

/// Scalar error range of a converged solve: sqrt(sigma^2 * trace((J^T J)^-1))
/// with sigma^2 = sum r_i^2 / max(1, n - dims). Grows with residual
/// magnitude, which is exactly what the acceptance gate needs. Throws
/// DegenerateGeometryError when J^T J is singular.
double error_range(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& jacobian,
                   int dims);

}  // namespace upsim::ranging
