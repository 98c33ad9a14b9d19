#pragma once

#include <span>
#include <string_view>

// Arithmetic inner loops shared by the density and divergence code. Each
// kernel has a portable scalar reference and, on x86-64, an AVX2+FMA variant.
// The variant is picked once per process from the CPU's capabilities; setting
// JSDSCORE_SIMD=scalar in the environment forces the reference path.

namespace jsdscore::kernels {

/// Lower clamp applied to the KL denominator.
inline constexpr double kDensityFloor = 1e-12;

struct KernelTable {
  std::string_view name;

  /// out[i] += sum_k exp(-0.5 * ((lo + i*step - centers[k]) * inv_h)^2)
  void (*gaussian_accumulate)(double lo, double step, double inv_h, std::span<const double> centers,
                              std::span<double> out);

  /// Trapezoid rule over uniformly spaced samples.
  double (*trapezoid)(std::span<const double> y, double step);

  /// Trapezoid rule applied to p * log2(p / max(q, kDensityFloor)), with
  /// zero contribution wherever p == 0.
  double (*kl_trapezoid)(std::span<const double> p, std::span<const double> q, double step);
};

const KernelTable& scalar() noexcept;

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2() noexcept;

/// The table used by the library.
const KernelTable& active() noexcept;

}  // namespace jsdscore::kernels
