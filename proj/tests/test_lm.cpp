#include <doctest.h>

#include <cmath>

#include "librotor/error.hpp"
#include "librotor/lm.hpp"

using namespace librotor;
using fit::Matrix;
using fit::Vector;

TEST_CASE("exponential decay is recovered exactly") {
  const int m = 40;
  Vector t(m), y(m);
  for (int i = 0; i < m; ++i) {
    t(i) = 0.1 * i;
    y(i) = 3.0 * std::exp(-1.7 * t(i));
  }
  fit::LmProblem prob;
  prob.n_params = 2;
  prob.evaluate = [&](const Vector& p, Vector& r, Matrix& J) {
    r.resize(m);
    J.resize(m, 2);
    for (int i = 0; i < m; ++i) {
      const double e = std::exp(-p(1) * t(i));
      r(i) = y(i) - p(0) * e;
      J(i, 0) = e;
      J(i, 1) = -p(0) * t(i) * e;
    }
    return true;
  };
  Vector p0(2);
  p0 << 1.0, 0.5;
  const fit::LmReport rep = fit::levenberg_marquardt(prob, p0);
  CHECK(rep.converged);
  CHECK(rep.params(0) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(rep.params(1) == doctest::Approx(1.7).epsilon(1e-10));
  CHECK(rep.cost < 1e-20);
}

TEST_CASE("bounds are respected") {
  fit::LmProblem prob;
  prob.n_params = 1;
  prob.evaluate = [](const Vector& p, Vector& r, Matrix& J) {
    r.resize(3);
    J.resize(3, 1);
    for (int i = 0; i < 3; ++i) {
      r(i) = -2.0 - p(0);  // wants p = -2
      J(i, 0) = 1.0;
    }
    return true;
  };
  prob.lower = Vector::Zero(1);
  prob.upper = Vector::Constant(1, 10.0);
  const fit::LmReport rep = fit::levenberg_marquardt(prob, Vector::Constant(1, 5.0));
  CHECK(rep.params(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("singular start is reported as a degenerate window") {
  fit::LmProblem prob;
  prob.n_params = 2;
  prob.evaluate = [](const Vector&, Vector& r, Matrix& J) {
    r = Vector::Ones(5);
    J = Matrix::Zero(5, 2);
    J.col(0).setOnes();
    J.col(1).setOnes();  // identical columns
    return true;
  };
  CHECK_THROWS_WITH_AS(fit::levenberg_marquardt(prob, Vector::Zero(2)), "degenerate fit window", FitError);
}

TEST_CASE("covariance is the inverse normal matrix") {
  Matrix n(2, 2);
  n << 4.0, 1.0, 1.0, 3.0;
  const Matrix c = fit::covariance_from_normal(n);
  CHECK((n * c - Matrix::Identity(2, 2)).norm() < 1e-14);
}
