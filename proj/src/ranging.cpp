// Copyright upsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "upsim/ranging.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "upsim/errors.hpp"

namespace upsim::ranging {

namespace {

// Residuals r_i = |x - s_i| - d_i and Jacobian rows dr_i/dx = (x - s_i)^T / |x - s_i|.
void evaluate(std::span<const RangeObservation> obs, const Eigen::VectorXd& x,
              Eigen::VectorXd& residuals, Eigen::MatrixXd& jacobian) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd diff = x - obs[static_cast<std::size_t>(i)].station_pos;
    const double dist = diff.norm();
    residuals[i] = dist - obs[static_cast<std::size_t>(i)].bound_m;
    if (dist > 1e-12) {
      jacobian.row(i) = diff.transpose() / dist;
    } else {
      jacobian.row(i).setZero();  // subgradient at the station itself
    }
  }
}

double condition_number(const Eigen::MatrixXd& normal) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(normal);
  const auto& values = eigensolver.eigenvalues();
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(lo > 0.0) || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

double distance_bound(timebase::Instant t_s, timebase::Instant t_m, double c_m_per_s) {
  if (t_s > t_m) {
    throw FutureTimestampError("broadcast timestamp later than receipt time");
  }
  return c_m_per_s * timebase::delta_seconds(t_s, t_m);
}

double objective(std::span<const RangeObservation> obs, const geom::Vec& x) {
  double sum = 0.0;
  for (const auto& o : obs) {
    const double r = (x - o.station_pos).norm() - o.bound_m;
    sum += r * r;
  }
  return sum;
}

Fix solve_position(std::span<const RangeObservation> obs, int dims,
                   const SolveOptions& options) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (dims != 2 && dims != 3) throw Error("solve_position: dims must be 2 or 3");
  if (n < dims + 1) {
    throw UnderdeterminedError("need at least dims+1 range observations");
  }
  for (const auto& o : obs) {
    if (static_cast<int>(o.station_pos.size()) != dims) {
      throw Error("solve_position: observation dimension mismatch");
    }
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dims);
  for (const auto& o : obs) x += o.station_pos;
  x /= static_cast<double>(n);

  Eigen::VectorXd residuals(n);
  Eigen::MatrixXd jacobian(n, dims);

  // The geometry gate runs at the raw centroid: collinear (coplanar)
  // stations leave the range directions rank-deficient there, which is
  // exactly the unresolvable mirror ambiguity.
  evaluate(obs, x, residuals, jacobian);
  if (condition_number(jacobian.transpose() * jacobian) > options.condition_limit) {
    throw DegenerateGeometryError("stations are collinear/coplanar");
  }

  // A centroid that coincides with a station has no defined range gradient
  // for that station; nudge off it deterministically.
  for (const auto& o : obs) {
    if ((x - Eigen::VectorXd(o.station_pos)).norm() <= 1e-9) {
      x.array() += 1e-6;
      evaluate(obs, x, residuals, jacobian);
      break;
    }
  }

  double cost = residuals.squaredNorm();
  double damping = options.initial_damping;
  bool converged = false;
  int iterations = 0;

  Eigen::VectorXd trial_residuals(n);
  Eigen::MatrixXd trial_jacobian(n, dims);

  while (iterations < options.max_iterations) {
    const Eigen::VectorXd gradient = jacobian.transpose() * residuals;
    if (gradient.lpNorm<Eigen::Infinity>() <=
        options.gradient_tol * std::max(1.0, residuals.norm())) {
      converged = true;
      break;
    }
    ++iterations;

    // One damped step per iteration: raise the damping until the step
    // lowers the cost, then relax it for the next round.
    bool improved = false;
    while (damping <= 1e18) {
      Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
      normal.diagonal().array() += damping;
      const Eigen::VectorXd step = normal.ldlt().solve(-gradient);
      const Eigen::VectorXd trial = x + step;

      evaluate(obs, trial, trial_residuals, trial_jacobian);
      const double trial_cost = trial_residuals.squaredNorm();
      if (trial_cost < cost) {
        const double improvement = cost - trial_cost;
        x = trial;
        residuals.swap(trial_residuals);
        jacobian.swap(trial_jacobian);
        cost = trial_cost;
        damping = std::max(damping / 10.0, 1e-15);
        improved = true;
        if (improvement <= options.cost_tol * cost) converged = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) {
      // no downhill step exists to working precision: this is the
      // numerical optimum of the objective
      converged = true;
    }
    if (converged) break;
  }

  if (!converged) {
    throw NoConvergenceError("position solve did not converge");
  }

  Fix fix;
  fix.position = x;
  fix.residuals_m.assign(residuals.data(), residuals.data() + n);
  fix.iterations = iterations;
  fix.error_range_m = error_range(residuals, jacobian, dims);
  return fix;
}

double error_range(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& jacobian,
                   int dims) {
  const auto n = residuals.size();
  const double sigma_sq = residuals.squaredNorm() / std::max<double>(1.0, n - dims);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(jacobian.transpose() * jacobian);
  const auto& values = eigensolver.eigenvalues();
  double trace_inverse = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) {
      throw DegenerateGeometryError("normal matrix is singular");
    }
    trace_inverse += 1.0 / values[i];
  }
  return std::sqrt(sigma_sq * trace_inverse);
}

}  // namespace upsim::ranging
