#pragma once

// Data-parallel inner loops used by the synthesizer and the fitters.
//
// Every kernel has a scalar reference implementation and an AVX2 variant.
// The variant is selected once at runtime from CPUID; both perform the same
// IEEE operations in the same order, so results are bit-identical across
// ISAs (verified by the kernel equivalence tests).

#include <optional>
#include <span>
#include <string_view>

namespace librotor::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
/// Pins dispatch to one ISA (tests, benchmarks). nullopt restores autodetect.
void force_isa(std::optional<Isa> isa);

/// out[i] += (area/pi) * hwhm / ((x[i] - center)^2 + hwhm^2)
void lorentzian_accumulate(std::span<const double> x, double center, double hwhm, double area,
                           std::span<double> out);

struct LorentzianJacobian {
  std::span<double> value;
  std::span<double> d_center;
  std::span<double> d_hwhm;
  std::span<double> d_area;
};

/// Area-normalised Lorentzian and its partial derivatives on x.
void lorentzian_jacobian(std::span<const double> x, double center, double hwhm, double area,
                         const LorentzianJacobian& out);

/// sum_i w[i] * r[i]^2, accumulated in four interleaved partial sums.
double weighted_sum_squares(std::span<const double> r, std::span<const double> w);

/// w[i] = averages / max(model[i], floor)^2: inverse variance of an
/// averaged periodogram bin with the given mean.
void periodogram_weights(std::span<const double> model, double averages, double floor,
                         std::span<double> w);

namespace detail {
struct KernelTable {
  void (*lorentzian_accumulate)(const double*, std::size_t, double, double, double, double*);
  void (*lorentzian_jacobian)(const double*, std::size_t, double, double, double, double*, double*,
                              double*, double*);
  double (*weighted_sum_squares)(const double*, const double*, std::size_t);
  void (*periodogram_weights)(const double*, std::size_t, double, double, double*);
};
const KernelTable& scalar_table();
#if defined(LIBROTOR_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace librotor::kernels
