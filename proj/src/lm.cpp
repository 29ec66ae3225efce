#include "librotor/lm.hpp"

#include <cmath>
#include <limits>

#include "librotor/error.hpp"

namespace librotor::fit {

namespace {

Vector clamp_to_bounds(const LmProblem& problem, Vector p) {
  if (problem.lower.size() == p.size()) p = p.cwiseMax(problem.lower);
  if (problem.upper.size() == p.size()) p = p.cwiseMin(problem.upper);
  return p;
}

bool is_singular(const Matrix& jtj) {
  const double max_diag = jtj.diagonal().cwiseAbs().maxCoeff();
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) return true;
  for (Eigen::Index i = 0; i < jtj.rows(); ++i)
    if (!(jtj(i, i) > 0.0)) return true;
  // Correlation form: scale-free conditioning test.
  const Vector d = jtj.diagonal().cwiseSqrt().cwiseInverse();
  const Matrix corr = d.asDiagonal() * jtj * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() < 1e-14;
}

}  // namespace

LmReport levenberg_marquardt(const LmProblem& problem, Vector initial, const LmOptions& options) {
  const int n = problem.n_params;
  Vector p = clamp_to_bounds(problem, std::move(initial));
  Vector r;
  Matrix J;
  if (!problem.evaluate(p, r, J)) throw FitError("initial parameters outside model domain");
  Matrix jtj = J.transpose() * J;
  Vector jtr = J.transpose() * r;
  if (is_singular(jtj)) throw FitError("degenerate fit window");
  double cost = 0.5 * r.squaredNorm();

  LmReport report;
  report.n_residuals = static_cast<int>(r.size());
  double lambda = options.initial_lambda;
  Vector r_trial;
  Matrix J_trial;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (cost == 0.0) {
      report.converged = true;
      break;
    }
    bool accepted = false;
    bool small_step = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Matrix a = jtj;
      for (int k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Vector step = a.ldlt().solve(jtr);
      const Vector p_trial = clamp_to_bounds(problem, p + step);
      const Vector actual_step = p_trial - p;
      small_step = true;
      for (int k = 0; k < n; ++k) {
        // Relative to the parameter itself or, near zero, to its standard error.
        const double sigma = 1.0 / std::sqrt(std::max(jtj(k, k), 1e-300));
        if (std::abs(actual_step(k)) > options.step_tolerance * (std::abs(p(k)) + sigma)) {
          small_step = false;
          break;
        }
      }
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      if (problem.evaluate(p_trial, r_trial, J_trial)) {
        const double trial_cost = 0.5 * r_trial.squaredNorm();
        if (std::isfinite(trial_cost) && trial_cost <= cost) {
          const double decrease = cost - trial_cost;
          p = p_trial;
          r.swap(r_trial);
          J.swap(J_trial);
          jtj = J.transpose() * J;
          jtr = J.transpose() * r;
          const bool cost_flat = decrease <= options.cost_tolerance * cost;
          cost = trial_cost;
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          if (small_step && cost_flat) report.converged = true;
          break;
        }
      }
      if (small_step) break;
      lambda *= 10.0;
    }
    if (report.converged) {
      ++it;
      break;
    }
    if (!accepted) {
      // No downhill step at any damping: we are at a (bounded) minimum.
      report.converged = small_step || lambda > 1e10;
      break;
    }
  }
  report.params = p;
  report.normal_matrix = jtj;
  report.cost = cost;
  report.iterations = it;
  return report;
}

Matrix covariance_from_normal(const Matrix& normal) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(normal);
  const Vector& ev = eig.eigenvalues();
  const double cutoff = ev.cwiseAbs().maxCoeff() * 1e-15;
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace librotor::fit
