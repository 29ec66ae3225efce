#include <immintrin.h>

#include <algorithm>

#include "librotor/kernels.hpp"
#include "librotor/units.hpp"

namespace librotor::kernels::detail {
namespace {

// Tails are handled with the scalar reference formulas so lane count
// never changes results.

void accumulate(const double* x, std::size_t n, double center, double hwhm, double area, double* out) {
  const double num_s = (area / kPi) * hwhm;
  const double h2_s = hwhm * hwhm;
  const __m256d c = _mm256_set1_pd(center);
  const __m256d num = _mm256_set1_pd(num_s);
  const __m256d h2 = _mm256_set1_pd(h2_s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    const __m256d den = _mm256_add_pd(_mm256_mul_pd(d, d), h2);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), _mm256_div_pd(num, den)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - center;
    const double den = d * d + h2_s;
    out[i] = out[i] + num_s / den;
  }
}

void jacobian(const double* x, std::size_t n, double center, double hwhm, double area, double* value,
              double* d_center, double* d_hwhm, double* d_area) {
  const double scale_s = area / kPi;
  const double num_s = scale_s * hwhm;
  const double two_num_s = 2.0 * num_s;
  const double h_over_pi_s = hwhm / kPi;
  const double h2_s = hwhm * hwhm;
  const __m256d c = _mm256_set1_pd(center);
  const __m256d scale = _mm256_set1_pd(scale_s);
  const __m256d num = _mm256_set1_pd(num_s);
  const __m256d two_num = _mm256_set1_pd(two_num_s);
  const __m256d h_over_pi = _mm256_set1_pd(h_over_pi_s);
  const __m256d h2 = _mm256_set1_pd(h2_s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    const __m256d dd = _mm256_mul_pd(d, d);
    const __m256d den = _mm256_add_pd(dd, h2);
    const __m256d den2 = _mm256_mul_pd(den, den);
    _mm256_storeu_pd(value + i, _mm256_div_pd(num, den));
    _mm256_storeu_pd(d_center + i, _mm256_div_pd(_mm256_mul_pd(two_num, d), den2));
    _mm256_storeu_pd(d_hwhm + i, _mm256_div_pd(_mm256_mul_pd(scale, _mm256_sub_pd(dd, h2)), den2));
    _mm256_storeu_pd(d_area + i, _mm256_div_pd(h_over_pi, den));
  }
  for (; i < n; ++i) {
    const double d = x[i] - center;
    const double dd = d * d;
    const double den = dd + h2_s;
    const double den2 = den * den;
    value[i] = num_s / den;
    d_center[i] = (two_num_s * d) / den2;
    d_hwhm[i] = (scale_s * (dd - h2_s)) / den2;
    d_area[i] = h_over_pi_s / den;
  }
}

double wss(const double* r, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rv = _mm256_loadu_pd(r + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), rv), rv));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (std::size_t k = 0; i < n; ++i, ++k) s[k] = s[k] + (w[i] * r[i]) * r[i];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

void weights(const double* model, std::size_t n, double averages, double floor, double* w) {
  const __m256d m_avg = _mm256_set1_pd(averages);
  const __m256d m_floor = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // Operand order matches std::max(model, floor), including NaN handling.
    const __m256d m = _mm256_max_pd(m_floor, _mm256_loadu_pd(model + i));
    _mm256_storeu_pd(w + i, _mm256_div_pd(m_avg, _mm256_mul_pd(m, m)));
  }
  for (; i < n; ++i) {
    const double m = std::max(model[i], floor);
    w[i] = averages / (m * m);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{accumulate, jacobian, wss, weights};
  return table;
}

}  // namespace librotor::kernels::detail
