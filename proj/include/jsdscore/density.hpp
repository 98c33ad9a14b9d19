#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jsdscore {

inline constexpr std::size_t kDefaultGridPoints = 512;
inline constexpr std::size_t kMinGridPoints = 16;
/// Grid padding beyond the sample range, in bandwidths.
inline constexpr double kGridPaddingBandwidths = 4.0;

/// Uniform evaluation grid [lo, hi] with n_points nodes.
class Grid {
 public:
  Grid(double lo, double hi, std::size_t n_points);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t n_points() const noexcept { return n_points_; }
  double spacing() const noexcept { return (hi_ - lo_) / static_cast<double>(n_points_ - 1); }
  double x(std::size_t i) const noexcept { return lo_ + static_cast<double>(i) * spacing(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double lo_;
  double hi_;
  std::size_t n_points_;
};

/// Normalized, non-negative density tabulated on a Grid.
struct DensityOnGrid {
  Grid grid;
  std::vector<double> values;
};

struct KdeResult {
  DensityOnGrid density;
  std::size_t clipped = 0;  ///< samples moved onto a grid endpoint
};

/// Robust Silverman rule 0.9 * min(sd, IQR/1.34) * n^(-1/5), quartiles by
/// linear interpolation. Falls back to max(0.01 * max(1, |mean|), 1e-6) when
/// n == 1 or the dispersion term is zero. Throws InvalidInput on empty or
/// non-finite input.
double silverman_bandwidth(std::span<const double> samples);

/// [min - 4h, max + 4h] with n_points nodes.
Grid build_grid(std::span<const double> samples, double bandwidth,
                std::size_t n_points = kDefaultGridPoints);

/// Gaussian KDE evaluated on `grid` and renormalized to unit trapezoid mass.
/// Samples outside the grid are clipped to the nearest endpoint first.
KdeResult kde_on_grid(std::span<const double> samples, double bandwidth, const Grid& grid);

double trapezoid_integral(const DensityOnGrid& density);

/// Linearly interpolated quantile (numpy's default convention); `sorted` must be ascending.
double interpolated_quantile(std::span<const double> sorted, double prob);

}  // namespace jsdscore
