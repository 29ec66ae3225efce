#include "librotor/geometry.hpp"

#include <cmath>

#include "librotor/error.hpp"

namespace librotor {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

std::string_view to_string(Geometry g) {
  switch (g) {
    case Geometry::sphere: return "sphere";
    case Geometry::dumbbell: return "dumbbell";
    case Geometry::trimer: return "trimer";
    case Geometry::unclassified: break;
  }
  return "unclassified";
}

const std::vector<ReferenceBand>& reference_bands() {
  static const std::vector<ReferenceBand> bands{
      {Geometry::sphere, 0.98, 1.02},
      {Geometry::dumbbell, 1.258, 1.276},
      {Geometry::trimer, 1.358, 1.398},
  };
  return bands;
}

RatioEstimate ratio_error(const DampingMeasurement& m) {
  if (!(m.gamma_x > 0.0)) throw InputError("gamma_x must be > 0");
  if (!(m.gamma_y > 0.0)) throw InputError("gamma_y must be > 0");
  if (!(m.gamma_x_err >= 0.0) || !(m.gamma_y_err >= 0.0)) throw InputError("damping errors must be >= 0");
  RatioEstimate r;
  r.ratio = m.gamma_y / m.gamma_x;
  r.sigma = r.ratio * std::hypot(m.gamma_x_err / m.gamma_x, m.gamma_y_err / m.gamma_y);
  return r;
}

GeometryClass classify(const DampingMeasurement& m) {
  const RatioEstimate r = ratio_error(m);
  GeometryClass out;
  out.ratio = r.ratio;
  out.sigma = r.sigma;
  double confidence = 0.0;
  for (const ReferenceBand& band : reference_bands()) {
    const double lo = band.lo - 3.0 * r.sigma;
    const double hi = band.hi + 3.0 * r.sigma;
    if (r.ratio < lo || r.ratio > hi) continue;
    out.candidates.push_back(band.label);
    if (r.sigma > 0.0)
      confidence = normal_cdf((hi - r.ratio) / r.sigma) - normal_cdf((lo - r.ratio) / r.sigma);
    else
      confidence = 1.0;
  }
  if (out.candidates.size() == 1) {
    out.label = out.candidates.front();
    out.confidence = confidence;
  } else if (out.candidates.empty()) {
    out.note = "ratio outside every reference band (cluster or unknown shape)";
  } else {
    out.note = "error bar spans several reference bands";
  }
  return out;
}

}  // namespace librotor
