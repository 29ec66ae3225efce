#pragma once

// Particle-shape classification from the anisotropy of translational gas
// damping, gamma_y / gamma_x.

#include <string>
#include <string_view>
#include <vector>

namespace librotor {

enum class Geometry { sphere, dumbbell, trimer, unclassified };

std::string_view to_string(Geometry g);

struct DampingMeasurement {
  double gamma_x = 0.0;  // rad/s
  double gamma_x_err = 0.0;
  double gamma_y = 0.0;
  double gamma_y_err = 0.0;
  double pressure_mbar = 0.0;
};

struct RatioEstimate {
  double ratio = 0.0;
  double sigma = 0.0;
};

struct ReferenceBand {
  Geometry label = Geometry::sphere;
  double lo = 0.0;
  double hi = 0.0;
};

/// sphere [0.98, 1.02], dumbbell [1.258, 1.276], trimer [1.358, 1.398].
const std::vector<ReferenceBand>& reference_bands();

struct GeometryClass {
  Geometry label = Geometry::unclassified;
  double ratio = 0.0;
  double sigma = 0.0;
  double confidence = 0.0;  // probability mass inside the winning acceptance window
  std::vector<Geometry> candidates;  // every band whose acceptance window holds the ratio
  std::string note;
};

/// First-order propagation; throws InputError unless gamma_x > 0.
RatioEstimate ratio_error(const DampingMeasurement& m);

/// Acceptance window of a band: [lo - 3 sigma, hi + 3 sigma]. Exactly one
/// window containing the ratio gives that label; none or several give
/// unclassified.
GeometryClass classify(const DampingMeasurement& m);

}  // namespace librotor
