#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jsdscore/cohort.hpp"

namespace jsdscore {

struct SynthFeature {
  std::string id;
  double mean = 0.0;
  double sd = 1.0;
  double missingness = 0.0;  ///< per-cell probability of being unobserved
  /// Post-onset distribution for treatment patients; overrides the step shift.
  std::optional<double> treatment_mean;
  std::optional<double> treatment_sd;
};

struct DriftSpec {
  std::size_t onset_hour = 24;
  std::vector<std::string> shifted_features;
  double shift_sds = 2.0;
};

struct SynthConfig {
  std::vector<SynthFeature> features;
  std::size_t n_control = 200;
  std::size_t n_treatment = 20;
  std::size_t horizon = kDefaultHorizon;
  DriftSpec drift;
  std::uint64_t seed = 1;

  /// Control-group statistics for all 27 default features; the shifted set is
  /// calcium, hemoglobin, sodium, white cell count, temperature and heart rate.
  static SynthConfig clinical_default();

  /// Throws InvalidInput describing the first violated constraint.
  void validate() const;
};

/// Control patients draw every observed hourly value from N(mean, sd).
/// Treatment patients match them before the onset hour; from then on shifted
/// features draw from N(mean + shift_sds * sd, sd). Each cell is independently
/// missing with the feature's missingness rate. Patients are named c0001...,
/// t0001... and each uses its own seed derived from (seed, cohort, index).
ObservationTable generate_cohort(const SynthConfig& config);

}  // namespace jsdscore
