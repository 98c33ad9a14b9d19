#include "jsdscore/divergence.hpp"

#include "jsdscore/error.hpp"
#include "jsdscore/kernels.hpp"

namespace jsdscore {
namespace {

void require_same_grid(const DensityOnGrid& p, const DensityOnGrid& q) {
  if (!(p.grid == q.grid) || p.values.size() != q.values.size() || p.values.size() != p.grid.n_points()) {
    throw Error(ErrorKind::GridMismatch, "densities are not tabulated on the same grid");
  }
}

}  // namespace

double kl_divergence(const DensityOnGrid& p, const DensityOnGrid& q) {
  require_same_grid(p, q);
  const double kl = kernels::active().kl_trapezoid(p.values, q.values, p.grid.spacing());
  // Discretization can leave a tiny negative residue where p ~ q.
  if (kl < 0.0 && kl >= -1e-9) return 0.0;
  return kl;
}

DensityOnGrid mixture(const DensityOnGrid& p, const DensityOnGrid& q) {
  require_same_grid(p, q);
  DensityOnGrid r{p.grid, std::vector<double>(p.values.size())};
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = 0.5 * (p.values[i] + q.values[i]);
  return r;
}

double jsd(const DensityOnGrid& p, const DensityOnGrid& q) {
  const DensityOnGrid r = mixture(p, q);
  return 0.5 * kl_divergence(p, r) + 0.5 * kl_divergence(q, r);
}

double comprehensive_score(const FeatureScoreMap& scores) {
  if (scores.entries.empty()) throw Error(ErrorKind::NoFeaturesAvailable, "no per-feature scores to aggregate");
  double sum = 0.0;
  for (const auto& [id, v] : scores.entries) sum += v;
  return sum / static_cast<double>(scores.entries.size());
}

}  // namespace jsdscore
