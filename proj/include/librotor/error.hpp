#pragma once

#include <stdexcept>
#include <string>

namespace librotor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, files or arguments. Maps to CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A physical model evaluated outside its domain (no net cooling, spring
/// instability, unidentifiable inertia).
class PhysicsError : public Error {
 public:
  using Error::Error;
};

/// Fitting failures that are not plain non-convergence.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Per-trace analysis failures (unphysical asymmetry, bad calibration).
/// Maps to CLI exit code 3.
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace librotor
