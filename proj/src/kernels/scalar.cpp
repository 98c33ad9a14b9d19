#include <cmath>

#include "jsdscore/kernels.hpp"

namespace jsdscore::kernels {
namespace {

void gaussian_accumulate(double lo, double step, double inv_h, std::span<const double> centers,
                         std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = lo + static_cast<double>(i) * step;
    double acc = 0.0;
    for (double c : centers) {
      const double z = (x - c) * inv_h;
      acc += std::exp(-0.5 * z * z);
    }
    out[i] += acc;
  }
}

double trapezoid(std::span<const double> y, double step) {
  if (y.size() < 2) return 0.0;
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) interior += y[i];
  return step * (interior + 0.5 * (y.front() + y.back()));
}

inline double kl_term(double p, double q) {
  if (p <= 0.0) return 0.0;
  return p * std::log2(p / std::max(q, kDensityFloor));
}

double kl_trapezoid(std::span<const double> p, std::span<const double> q, double step) {
  const std::size_t n = p.size();
  if (n < 2) return 0.0;
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) interior += kl_term(p[i], q[i]);
  return step * (interior + 0.5 * (kl_term(p[0], q[0]) + kl_term(p[n - 1], q[n - 1])));
}

constexpr KernelTable kScalar{"scalar", &gaussian_accumulate, &trapezoid, &kl_trapezoid};

}  // namespace

const KernelTable& scalar() noexcept { return kScalar; }

}  // namespace jsdscore::kernels
