#include <algorithm>
#include <atomic>

#include "librotor/kernels.hpp"

namespace librotor::kernels {

namespace {

Isa detect() {
#if defined(LIBROTOR_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
  return Isa::scalar;
}

std::atomic<int> g_forced{-1};

const detail::KernelTable& table() {
  static const Isa detected = detect();
  const int forced = g_forced.load(std::memory_order_relaxed);
  [[maybe_unused]] const Isa isa = forced >= 0 ? static_cast<Isa>(forced) : detected;
#if defined(LIBROTOR_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_table();
#endif
  return detail::scalar_table();
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(LIBROTOR_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  return forced >= 0 ? static_cast<Isa>(forced) : detect();
}

void force_isa(std::optional<Isa> isa) {
  if (isa && !isa_available(*isa)) isa = Isa::scalar;
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

void lorentzian_accumulate(std::span<const double> x, double center, double hwhm, double area,
                           std::span<double> out) {
  table().lorentzian_accumulate(x.data(), std::min(x.size(), out.size()), center, hwhm, area,
                                out.data());
}

void lorentzian_jacobian(std::span<const double> x, double center, double hwhm, double area,
                         const LorentzianJacobian& out) {
  table().lorentzian_jacobian(x.data(), x.size(), center, hwhm, area, out.value.data(),
                              out.d_center.data(), out.d_hwhm.data(), out.d_area.data());
}

double weighted_sum_squares(std::span<const double> r, std::span<const double> w) {
  return table().weighted_sum_squares(r.data(), w.data(), std::min(r.size(), w.size()));
}

void periodogram_weights(std::span<const double> model, double averages, double floor,
                         std::span<double> w) {
  table().periodogram_weights(model.data(), std::min(model.size(), w.size()), averages, floor,
                              w.data());
}

}  // namespace librotor::kernels
