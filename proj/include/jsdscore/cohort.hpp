#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jsdscore/density.hpp"

namespace jsdscore {

inline constexpr std::size_t kDefaultHorizon = 48;
inline constexpr double kDatasetMissingThreshold = 0.25;
inline constexpr double kPatientMinPresent = 0.25;
inline constexpr double kCohortMissingThreshold = 0.75;

enum class Cohort { Unlabeled, Control, Treatment };

struct Observation {
  std::string patient_id;
  double hour = 0.0;  ///< hours since admission
  std::string feature_id;
  double value = 0.0;
};

/// Long-format irregular observations plus optional cohort labels.
struct ObservationTable {
  std::vector<std::string> features;  ///< column order for derived matrices
  std::vector<Observation> rows;
  std::map<std::string, Cohort> labels;

  /// Distinct patient ids, sorted.
  std::vector<std::string> patients() const;
  Cohort cohort_of(const std::string& patient_id) const;
};

/// H x M grid of hourly cells; std::nullopt marks a missing cell.
class HourlyMatrix {
 public:
  HourlyMatrix(std::string patient_id, std::size_t horizon, std::vector<std::string> features);

  const std::string& patient_id() const noexcept { return patient_id_; }
  std::size_t horizon() const noexcept { return horizon_; }
  const std::vector<std::string>& features() const noexcept { return features_; }
  std::size_t n_features() const noexcept { return features_.size(); }
  std::optional<std::size_t> feature_index(const std::string& id) const;

  const std::optional<double>& at(std::size_t hour, std::size_t feature) const {
    return cells_.at(hour * features_.size() + feature);
  }
  std::optional<double>& at(std::size_t hour, std::size_t feature) {
    return cells_.at(hour * features_.size() + feature);
  }

  std::size_t present_count(std::size_t feature) const;
  std::size_t missing_cells() const;

  /// Copy holding only the first `hours` rows.
  HourlyMatrix truncated(std::size_t hours) const;

  /// Copy restricted to `keep` (in that order); every id must be a column.
  HourlyMatrix select_features(const std::vector<std::string>& keep) const;

  friend bool operator==(const HourlyMatrix&, const HourlyMatrix&) = default;

 private:
  std::string patient_id_;
  std::size_t horizon_;
  std::vector<std::string> features_;
  std::vector<std::optional<double>> cells_;
};

struct FeatureReference {
  std::string feature_id;
  DensityOnGrid density;
  double bandwidth = 0.0;
  std::size_t n_samples = 0;
  double sample_mean = 0.0;
  double sample_sd = 0.0;
};

struct ReferenceMetadata {
  int schema_version = 1;
  std::vector<std::string> features;
  std::map<std::string, double> thresholds;
  std::string created;  ///< ISO-8601 UTC
  std::size_t source_rows = 0;
  std::vector<std::string> excluded_patients;
};

/// Per-feature control-cohort densities; immutable once built.
struct ReferenceModel {
  static constexpr int kSchemaVersion = 1;

  ReferenceMetadata metadata;
  std::vector<FeatureReference> features;

  const FeatureReference* find(const std::string& feature_id) const;
  std::vector<std::string> feature_ids() const;
};

/// Cell (i, j) holds the chronologically last observation of feature j with
/// floor(hour) == i. Throws NotFound for an unknown patient.
HourlyMatrix bucket_hourly(const ObservationTable& obs, const std::string& patient_id,
                           std::size_t horizon = kDefaultHorizon);

/// bucket_hourly for every patient in one pass, keyed by patient id.
std::map<std::string, HourlyMatrix> bucket_all_hourly(const ObservationTable& obs,
                                                      std::size_t horizon = kDefaultHorizon);

struct DroppedFeature {
  std::string feature_id;
  double missing_fraction = 0.0;
  double threshold = 0.0;
  std::string stage;
};

struct SparseDropResult {
  ObservationTable table;
  std::vector<DroppedFeature> dropped;
};

/// Drops features whose missing fraction over every patient's hourly buckets
/// exceeds `threshold`.
SparseDropResult drop_sparse_features(const ObservationTable& obs,
                                      double threshold = kDatasetMissingThreshold,
                                      std::size_t horizon = kDefaultHorizon);

/// Fills a column's gaps with the patient's own column mean when at least
/// `min_present` of the column is observed; sparser columns are left alone.
HourlyMatrix patient_mean_impute(const HourlyMatrix& matrix, double min_present = kPatientMinPresent);

struct CohortImputeResult {
  std::vector<HourlyMatrix> matrices;
  std::vector<DroppedFeature> dropped;
};

/// Drops features missing more than `sparse_threshold` within either labeled
/// cohort, then fills remaining gaps with the patient's cohort mean.
CohortImputeResult cohort_mean_impute(const std::vector<HourlyMatrix>& matrices,
                                      const std::map<std::string, Cohort>& labels,
                                      double sparse_threshold = kCohortMissingThreshold);

struct ReferenceBuildOptions {
  std::size_t grid_points = kDefaultGridPoints;
  std::set<std::string> exclude_patients;
};

/// Pools every control patient's hourly values per feature and fits a KDE.
ReferenceModel build_reference(const std::vector<HourlyMatrix>& control_matrices,
                               const ReferenceBuildOptions& options = {});

struct PipelineOptions {
  std::size_t horizon = kDefaultHorizon;
  double dataset_missing_threshold = kDatasetMissingThreshold;
  double patient_min_present = kPatientMinPresent;
  double cohort_missing_threshold = kCohortMissingThreshold;
  ReferenceBuildOptions build;
  std::string created;  ///< stamped into metadata; empty means "now"
};

struct PipelineResult {
  ReferenceModel model;
  std::vector<DroppedFeature> dropped;
};

/// drop_sparse_features -> bucket_hourly -> patient_mean_impute ->
/// cohort_mean_impute -> build_reference over the control patients.
PipelineResult build_reference_pipeline(const ObservationTable& obs, const PipelineOptions& options = {});

/// Reorders a bucketed matrix onto `features` (absent columns become
/// all-missing) and applies patient_mean_impute: the form consumed by scoring.
/// No cohort-level fill is applied.
HourlyMatrix prepare_for_scoring(const HourlyMatrix& bucketed, const std::vector<std::string>& features,
                                 double min_present = kPatientMinPresent);

}  // namespace jsdscore
