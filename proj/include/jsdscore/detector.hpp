#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jsdscore/cohort.hpp"
#include "jsdscore/divergence.hpp"

namespace jsdscore {

/// One scored hour. `comprehensive` is empty when no feature had data in the
/// window (the NoFeaturesAvailable case).
struct ScoreRecord {
  std::string patient_id;
  long hour_index = 0;
  FeatureScoreMap per_feature;
  std::optional<double> comprehensive;
  std::vector<std::string> features_skipped;

  std::size_t features_used() const noexcept { return per_feature.features_used(); }

  friend bool operator==(const ScoreRecord& a, const ScoreRecord& b) {
    return a.patient_id == b.patient_id && a.hour_index == b.hour_index &&
           a.per_feature.entries == b.per_feature.entries && a.comprehensive == b.comprehensive &&
           a.features_skipped == b.features_skipped;
  }
};

using HourValues = std::map<std::string, std::optional<double>>;

/// Online two-hour sliding-window scorer for a single patient.
///
/// Each pushed hour fills one slot of a per-feature window holding the two
/// most recent hourly values. From the second hour on, every feature with at
/// least one value in the window gets a Gaussian KDE on the reference grid and
/// its Jensen-Shannon divergence against the reference density; the
/// comprehensive score is the mean over scored features.
///
/// A Scorer is single-owner. Many scorers can share one reference.
class Scorer {
 public:
  Scorer(std::shared_ptr<const ReferenceModel> reference, std::string patient_id);

  /// `hour_index` must be exactly one past the previous push (0 first).
  /// Throws OutOfOrder or UnknownFeature; the state is untouched on error.
  std::optional<ScoreRecord> push_hour(long hour_index, const HourValues& values);

  const std::string& patient_id() const noexcept { return patient_id_; }
  long last_hour_index() const noexcept { return last_hour_; }
  std::size_t clip_count() const noexcept { return clip_count_; }
  std::size_t buffered_hours() const noexcept { return buffered_; }
  std::size_t feature_slots() const noexcept { return window_.size(); }

 private:
  std::shared_ptr<const ReferenceModel> reference_;
  std::string patient_id_;
  // window_[j] = {older, newer}
  std::vector<std::array<std::optional<double>, 2>> window_;
  long last_hour_ = -1;
  std::size_t buffered_ = 0;
  std::size_t clip_count_ = 0;
};

/// JSD of a window of values against one feature's reference density. The
/// window bandwidth comes from silverman_bandwidth, floored at the grid spacing
/// so the kernel stays resolvable on the reference grid.
double window_divergence(const FeatureReference& ref, std::span<const double> window,
                         std::size_t* clipped = nullptr);

/// Batch form: horizon sequential pushes. Hours with no scorable feature are
/// omitted. Throws InvalidInput when the horizon is below 2.
std::vector<ScoreRecord> score_patient(std::shared_ptr<const ReferenceModel> reference,
                                       const HourlyMatrix& matrix);

}  // namespace jsdscore
