#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "jsdscore/density.hpp"
#include "jsdscore/error.hpp"
#include "test_support.hpp"

using namespace jsdscore;
using jsdscore::testing::normal_cdf;
using jsdscore::testing::normal_pdf;
using jsdscore::testing::reference_trapezoid;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("silverman bandwidth on 1..5 matches the hand-evaluated rule") {
  // sd = sqrt(2.5), quartiles 2 and 4 -> IQR/1.34 = 1.4925..., the smaller term.
  const double expected = 0.9 * (2.0 / 1.34) * std::pow(5.0, -0.2);
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(silverman_bandwidth(x) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(silverman_bandwidth(x) == doctest::Approx(0.9736).epsilon(1e-3));
}

TEST_CASE("silverman fallback for degenerate samples") {
  CHECK(silverman_bandwidth(std::vector<double>{7, 7, 7, 7}) == doctest::Approx(0.07).epsilon(1e-15));
  CHECK(silverman_bandwidth(std::vector<double>{0, 0, 0}) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(silverman_bandwidth(std::vector<double>{-250.0}) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(silverman_bandwidth(std::vector<double>{0.3}) == doctest::Approx(0.01).epsilon(1e-15));
  // IQR collapses while sd does not: min term is 0, so fallback applies.
  CHECK(silverman_bandwidth(std::vector<double>{5, 5, 5, 5, 5, 5, 5, 100}) == doctest::Approx(0.01 * (135.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("silverman rejects empty and non-finite input") {
  CHECK(kind_of([] { silverman_bandwidth(std::vector<double>{}); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { silverman_bandwidth(std::vector<double>{1.0, std::nan("")}); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { silverman_bandwidth(std::vector<double>{std::numeric_limits<double>::infinity()}); }) ==
        ErrorKind::InvalidInput);
}

TEST_CASE("silverman two-sample window uses the IQR branch") {
  // quartiles at 1/4 and 3/4 of the gap: IQR = d/2, sd = d/sqrt(2)
  const double d = 3.0;
  const double expected = 0.9 * (0.5 * d / 1.34) * std::pow(2.0, -0.2);
  CHECK(silverman_bandwidth(std::vector<double>{10.0, 10.0 + d}) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("silverman is scale covariant and translation invariant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(3.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(2 + trial % 40);
    for (double& v : x) v = n(rng);
    const double h = silverman_bandwidth(x);
    REQUIRE(h > 0.0);
    for (double c : {0.001, 0.5, 3.0, 1000.0}) {
      std::vector<double> scaled = x;
      for (double& v : scaled) v *= c;
      CHECK(std::abs(silverman_bandwidth(scaled) - c * h) <= 1e-10 * c * h);
    }
    for (double c : {-50.0, 0.25, 17.0}) {
      std::vector<double> shifted = x;
      for (double& v : shifted) v += c;
      CHECK(std::abs(silverman_bandwidth(shifted) - h) <= 1e-10 * h);
    }
  }
}

TEST_CASE("fallback bandwidth is always positive") {
  for (double v : {0.0, 1e-300, -1e-9, 1.0, -42.0, 1e12}) {
    CHECK(silverman_bandwidth(std::vector<double>(5, v)) > 0.0);
  }
}

TEST_CASE("build_grid pads by four bandwidths") {
  const Grid g1 = build_grid(std::vector<double>{0.0}, 1.0);
  CHECK(g1.lo() == -4.0);
  CHECK(g1.hi() == 4.0);
  CHECK(g1.n_points() == 512);
  const Grid g2 = build_grid(std::vector<double>{-1.0, 1.0}, 0.5);
  CHECK(g2.lo() == -3.0);
  CHECK(g2.hi() == 3.0);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(1000);
  for (double& v : x) v = n(rng);
  const Grid g3 = build_grid(x, silverman_bandwidth(x));
  CHECK(g3.lo() < -3.0);
  CHECK(g3.hi() > 3.0);
  CHECK(build_grid(x, 0.1, 64).n_points() == 64);
}

TEST_CASE("grid validation") {
  CHECK(kind_of([] { Grid(1.0, 1.0, 100); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { Grid(2.0, 1.0, 100); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { Grid(0.0, 1.0, 15); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { Grid(0.0, std::numeric_limits<double>::infinity(), 100); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([] { build_grid(std::vector<double>{1.0}, 0.0); }) == ErrorKind::InvalidInput);
  const Grid g(-1.0, 1.0, 21);
  CHECK(g.spacing() == doctest::Approx(0.1));
  CHECK(g.x(20) == doctest::Approx(1.0));
}

TEST_CASE("single kernel is unimodal and symmetric") {
  const Grid grid(-5.0, 5.0, 501);
  const auto kde = kde_on_grid(std::vector<double>{0.0}, 1.0, grid);
  const auto& v = kde.density.values;
  const auto peak = std::max_element(v.begin(), v.end()) - v.begin();
  CHECK(peak == 250);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v[i] - v[v.size() - 1 - i]) <= 1e-15);
  for (std::size_t i = 1; i <= 250; ++i) CHECK(v[i] >= v[i - 1]);
  CHECK(kde.clipped == 0);
}

TEST_CASE("two symmetric kernels give equal peaks") {
  const Grid grid(-5.0, 5.0, 501);
  const auto v = kde_on_grid(std::vector<double>{-2.0, 2.0}, 0.5, grid).density.values;
  // local maxima
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) peaks.push_back(i);
  }
  REQUIRE(peaks.size() == 2);
  CHECK(grid.x(peaks[0]) == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(grid.x(peaks[1]) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(v[peaks[0]] - v[peaks[1]]) <= 1e-6);
}

TEST_CASE("kde matches the analytic mixture normalized by its exact grid mass") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(1.0, 2.0);
  std::vector<double> x(25);
  for (double& v : x) v = n(rng);
  const double h = silverman_bandwidth(x);
  const Grid grid = build_grid(x, h, 2048);
  const auto kde = kde_on_grid(x, h, grid);
  double mass = 0.0;
  for (double c : x) mass += normal_cdf(grid.hi(), c, h) - normal_cdf(grid.lo(), c, h);
  mass /= static_cast<double>(x.size());
  double peak = 0.0;
  for (double v : kde.density.values) peak = std::max(peak, v);
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    double mix = 0.0;
    for (double c : x) mix += normal_pdf(grid.x(i), c, h);
    mix /= static_cast<double>(x.size()) * mass;
    // trapezoid vs exact mass differ at O(dx^2)
    CHECK(std::abs(kde.density.values[i] - mix) <= 1e-5 * peak);
  }
}

TEST_CASE("kde output is non-negative and normalized for random inputs") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + trial % 30);
    for (double& v : x) v = u(rng);
    const double h = silverman_bandwidth(x);
    const Grid grid = build_grid(x, h, 128 + 7 * trial);
    const auto kde = kde_on_grid(x, h, grid);
    CHECK(std::all_of(kde.density.values.begin(), kde.density.values.end(), [](double v) { return v >= 0.0; }));
    CHECK(std::abs(reference_trapezoid(kde.density.values, grid.spacing()) - 1.0) <= 1e-9);
    CHECK(std::abs(trapezoid_integral(kde.density) - 1.0) <= 1e-9);
  }
}

TEST_CASE("out-of-grid samples are clipped and counted") {
  const Grid grid(0.0, 10.0, 101);
  const auto kde = kde_on_grid(std::vector<double>{-3.0, 5.0, 12.0, 10.0}, 0.5, grid);
  CHECK(kde.clipped == 2);
  const auto clipped_equivalent = kde_on_grid(std::vector<double>{0.0, 5.0, 10.0, 10.0}, 0.5, grid);
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    CHECK(kde.density.values[i] == clipped_equivalent.density.values[i]);
  }
}

TEST_CASE("kde is translation equivariant with a shifted grid") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(40.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(10 + trial);
    for (double& v : x) v = n(rng);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    std::vector<double> centered = x;
    for (double& v : centered) v -= mean;
    const double h = silverman_bandwidth(x);
    const Grid grid = build_grid(x, h);
    const Grid shifted(grid.lo() - mean, grid.hi() - mean, grid.n_points());
    const auto a = kde_on_grid(x, h, grid).density.values;
    const auto b = kde_on_grid(centered, h, shifted).density.values;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
  }
}

TEST_CASE("kde rejects a bandwidth unresolvable on the grid") {
  const Grid grid(0.0, 1000.0, 16);
  CHECK(kind_of([&] { kde_on_grid(std::vector<double>{33.3}, 1e-3, grid); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] { kde_on_grid(std::vector<double>{}, 1.0, grid); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] { kde_on_grid(std::vector<double>{1.0}, -1.0, grid); }) == ErrorKind::InvalidInput);
}

TEST_CASE("interpolated quantile follows the linear convention") {
  const std::vector<double> s{1, 2, 3, 4};
  CHECK(interpolated_quantile(s, 0.25) == doctest::Approx(1.75));
  CHECK(interpolated_quantile(s, 0.75) == doctest::Approx(3.25));
  CHECK(interpolated_quantile(s, 0.0) == 1.0);
  CHECK(interpolated_quantile(s, 1.0) == 4.0);
}
