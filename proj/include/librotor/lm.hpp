#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) for small weighted problems.
//
// The caller supplies whitened residuals r = sqrt(w) (y - f(p)) and the
// Jacobian J = sqrt(w) df/dp, so J^T J is the Fisher matrix at the solution.

#include <functional>

#include <Eigen/Dense>

namespace librotor::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct LmProblem {
  int n_params = 0;
  /// Fills r (size m) and J (m x n_params). Returns false when p is outside
  /// the model domain (the step is then rejected).
  std::function<bool(const Vector& p, Vector& r, Matrix& J)> evaluate;
  Vector lower;  // empty: unbounded
  Vector upper;
};

struct LmOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;  // relative parameter step
  double cost_tolerance = 1e-12;  // relative cost decrease
  double initial_lambda = 1e-3;
};

struct LmReport {
  Vector params;
  Matrix normal_matrix;  // J^T J at params
  double cost = 0.0;     // 0.5 * |r|^2
  int iterations = 0;
  int n_residuals = 0;
  bool converged = false;
};

/// Throws FitError("degenerate fit window") when J^T J is singular at the
/// starting point.
LmReport levenberg_marquardt(const LmProblem& problem, Vector initial, const LmOptions& options = {});

/// Inverse of the normal matrix; pseudo-inverse on (near) singular input.
Matrix covariance_from_normal(const Matrix& normal);

}  // namespace librotor::fit
