#include "jsdscore/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "jsdscore/error.hpp"
#include "jsdscore/kernels.hpp"

namespace jsdscore {
namespace {

void validate_samples(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorKind::InvalidInput, "sample list is empty");
  for (double v : samples) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "sample contains a non-finite value");
  }
}

}  // namespace

Grid::Grid(double lo, double hi, std::size_t n_points) : lo_(lo), hi_(hi), n_points_(n_points) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw Error(ErrorKind::InvalidInput, "grid bounds must be finite with lo < hi");
  }
  if (n_points < kMinGridPoints) {
    throw Error(ErrorKind::InvalidInput,
                "grid needs at least " + std::to_string(kMinGridPoints) + " points, got " + std::to_string(n_points));
  }
}

double interpolated_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidInput, "quantile of empty sample");
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return sorted[below] + frac * (sorted[above] - sorted[below]);
}

double silverman_bandwidth(std::span<const double> samples) {
  validate_samples(samples);
  const auto n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  const double fallback = std::max(0.01 * std::max(1.0, std::abs(mean)), 1e-6);
  if (samples.size() == 1) return fallback;

  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = interpolated_quantile(sorted, 0.75) - interpolated_quantile(sorted, 0.25);

  const double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) return fallback;
  return 0.9 * spread * std::pow(n, -0.2);
}

Grid build_grid(std::span<const double> samples, double bandwidth, std::size_t n_points) {
  validate_samples(samples);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw Error(ErrorKind::InvalidInput, "bandwidth must be positive");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  return Grid(*mn - kGridPaddingBandwidths * bandwidth, *mx + kGridPaddingBandwidths * bandwidth, n_points);
}

KdeResult kde_on_grid(std::span<const double> samples, double bandwidth, const Grid& grid) {
  validate_samples(samples);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw Error(ErrorKind::InvalidInput, "bandwidth must be positive");

  KdeResult result{DensityOnGrid{grid, std::vector<double>(grid.n_points(), 0.0)}, 0};
  std::vector<double> centers(samples.begin(), samples.end());
  for (double& c : centers) {
    if (c < grid.lo() || c > grid.hi()) {
      c = std::clamp(c, grid.lo(), grid.hi());
      ++result.clipped;
    }
  }

  const auto& k = kernels::active();
  auto& values = result.density.values;
  k.gaussian_accumulate(grid.lo(), grid.spacing(), 1.0 / bandwidth, centers, values);
  const double scale = 1.0 / (static_cast<double>(centers.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (double& v : values) v *= scale;

  const double mass = k.trapezoid(values, grid.spacing());
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw Error(ErrorKind::InvalidInput, "kernel mass vanishes on the grid; bandwidth is too small for the grid spacing");
  }
  for (double& v : values) v /= mass;
  return result;
}

double trapezoid_integral(const DensityOnGrid& density) {
  return kernels::active().trapezoid(density.values, density.grid.spacing());
}

}  // namespace jsdscore
