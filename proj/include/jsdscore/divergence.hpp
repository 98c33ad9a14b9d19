#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "jsdscore/density.hpp"

namespace jsdscore {

/// Per-feature divergences for one time step, in bits.
struct FeatureScoreMap {
  std::map<std::string, double> entries;

  std::size_t features_used() const noexcept { return entries.size(); }
};

/// Discretized KL(p || q) in bits. Throws GridMismatch when grids differ.
double kl_divergence(const DensityOnGrid& p, const DensityOnGrid& q);

/// Pointwise (p + q) / 2.
DensityOnGrid mixture(const DensityOnGrid& p, const DensityOnGrid& q);

/// Jensen-Shannon divergence in bits; lies in [0, 1].
double jsd(const DensityOnGrid& p, const DensityOnGrid& q);

/// Mean of the per-feature divergences. Throws NoFeaturesAvailable when empty.
double comprehensive_score(const FeatureScoreMap& scores);

}  // namespace jsdscore
