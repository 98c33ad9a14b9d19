#include "jsdscore/detector.hpp"

#include <algorithm>
#include <cmath>

#include "jsdscore/error.hpp"

namespace jsdscore {

double window_divergence(const FeatureReference& ref, std::span<const double> window, std::size_t* clipped) {
  const Grid& grid = ref.density.grid;
  const double h = std::max(silverman_bandwidth(window), grid.spacing());
  const KdeResult kde = kde_on_grid(window, h, grid);
  if (clipped != nullptr) *clipped += kde.clipped;
  return jsd(ref.density, kde.density);
}

Scorer::Scorer(std::shared_ptr<const ReferenceModel> reference, std::string patient_id)
    : reference_(std::move(reference)), patient_id_(std::move(patient_id)) {
  if (!reference_ || reference_->features.empty()) {
    throw Error(ErrorKind::InvalidInput, "scorer needs a reference model with at least one feature");
  }
  window_.resize(reference_->features.size());
}

std::optional<ScoreRecord> Scorer::push_hour(long hour_index, const HourValues& values) {
  if (hour_index != last_hour_ + 1) {
    throw Error(ErrorKind::OutOfOrder, "patient '" + patient_id_ + "': expected hour " + std::to_string(last_hour_ + 1) +
                                           ", got " + std::to_string(hour_index));
  }
  const auto& features = reference_->features;
  std::vector<std::optional<double>> incoming(features.size());
  for (const auto& [id, value] : values) {
    const auto it = std::find_if(features.begin(), features.end(),
                                 [&](const FeatureReference& f) { return f.feature_id == id; });
    if (it == features.end()) throw Error(ErrorKind::UnknownFeature, "feature '" + id + "' is not in the reference model");
    if (value && !std::isfinite(*value)) {
      throw Error(ErrorKind::InvalidInput, "non-finite value for feature '" + id + "'");
    }
    incoming[static_cast<std::size_t>(it - features.begin())] = value;
  }

  for (std::size_t j = 0; j < window_.size(); ++j) {
    window_[j][0] = window_[j][1];
    window_[j][1] = incoming[j];
  }
  last_hour_ = hour_index;
  ++buffered_;
  if (buffered_ < 2) return std::nullopt;

  ScoreRecord record;
  record.patient_id = patient_id_;
  record.hour_index = hour_index;
  std::vector<double> samples;
  for (std::size_t j = 0; j < window_.size(); ++j) {
    samples.clear();
    for (const auto& slot : window_[j]) {
      if (slot) samples.push_back(*slot);
    }
    if (samples.empty()) {
      record.features_skipped.push_back(features[j].feature_id);
      continue;
    }
    record.per_feature.entries[features[j].feature_id] = window_divergence(features[j], samples, &clip_count_);
  }
  if (!record.per_feature.entries.empty()) record.comprehensive = comprehensive_score(record.per_feature);
  return record;
}

std::vector<ScoreRecord> score_patient(std::shared_ptr<const ReferenceModel> reference, const HourlyMatrix& matrix) {
  if (matrix.horizon() < 2) throw Error(ErrorKind::InvalidInput, "scoring needs a horizon of at least 2 hours");
  Scorer scorer(std::move(reference), matrix.patient_id());
  std::vector<ScoreRecord> records;
  for (std::size_t h = 0; h < matrix.horizon(); ++h) {
    HourValues values;
    for (std::size_t j = 0; j < matrix.n_features(); ++j) values[matrix.features()[j]] = matrix.at(h, j);
    auto record = scorer.push_hour(static_cast<long>(h), values);
    if (record && record->comprehensive) records.push_back(std::move(*record));
  }
  return records;
}

}  // namespace jsdscore
