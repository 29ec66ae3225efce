#include <algorithm>

#include "librotor/kernels.hpp"
#include "librotor/units.hpp"

namespace librotor::kernels::detail {
namespace {

void accumulate(const double* x, std::size_t n, double center, double hwhm, double area, double* out) {
  const double num = (area / kPi) * hwhm;
  const double h2 = hwhm * hwhm;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    const double den = d * d + h2;
    out[i] = out[i] + num / den;
  }
}

void jacobian(const double* x, std::size_t n, double center, double hwhm, double area, double* value,
              double* d_center, double* d_hwhm, double* d_area) {
  const double scale = area / kPi;
  const double num = scale * hwhm;
  const double two_num = 2.0 * num;
  const double h_over_pi = hwhm / kPi;
  const double h2 = hwhm * hwhm;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    const double dd = d * d;
    const double den = dd + h2;
    const double den2 = den * den;
    value[i] = num / den;
    d_center[i] = (two_num * d) / den2;
    d_hwhm[i] = (scale * (dd - h2)) / den2;
    d_area[i] = h_over_pi / den;
  }
}

double wss(const double* r, const double* w, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) s[k] = s[k] + (w[i + k] * r[i + k]) * r[i + k];
  }
  for (std::size_t k = 0; i < n; ++i, ++k) s[k] = s[k] + (w[i] * r[i]) * r[i];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

void weights(const double* model, std::size_t n, double averages, double floor, double* w) {
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::max(model[i], floor);
    w[i] = averages / (m * m);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{accumulate, jacobian, wss, weights};
  return table;
}

}  // namespace librotor::kernels::detail
