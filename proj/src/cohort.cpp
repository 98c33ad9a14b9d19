#include "jsdscore/cohort.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>
#include <set>
#include <unordered_map>

#include "jsdscore/error.hpp"

namespace jsdscore {

std::vector<std::string> ObservationTable::patients() const {
  std::set<std::string> ids;
  for (const auto& row : rows) ids.insert(row.patient_id);
  for (const auto& [id, c] : labels) ids.insert(id);
  return {ids.begin(), ids.end()};
}

Cohort ObservationTable::cohort_of(const std::string& patient_id) const {
  const auto it = labels.find(patient_id);
  return it == labels.end() ? Cohort::Unlabeled : it->second;
}

HourlyMatrix::HourlyMatrix(std::string patient_id, std::size_t horizon, std::vector<std::string> features)
    : patient_id_(std::move(patient_id)),
      horizon_(horizon),
      features_(std::move(features)),
      cells_(horizon_ * features_.size()) {}

std::optional<std::size_t> HourlyMatrix::feature_index(const std::string& id) const {
  const auto it = std::find(features_.begin(), features_.end(), id);
  if (it == features_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - features_.begin());
}

std::size_t HourlyMatrix::present_count(std::size_t feature) const {
  std::size_t n = 0;
  for (std::size_t h = 0; h < horizon_; ++h) n += at(h, feature).has_value() ? 1 : 0;
  return n;
}

std::size_t HourlyMatrix::missing_cells() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return !c; }));
}

HourlyMatrix HourlyMatrix::truncated(std::size_t hours) const {
  HourlyMatrix out(patient_id_, std::min(hours, horizon_), features_);
  std::copy_n(cells_.begin(), out.cells_.size(), out.cells_.begin());
  return out;
}

HourlyMatrix HourlyMatrix::select_features(const std::vector<std::string>& keep) const {
  HourlyMatrix out(patient_id_, horizon_, keep);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const auto src = feature_index(keep[j]);
    if (!src) throw Error(ErrorKind::UnknownFeature, "matrix has no column '" + keep[j] + "'");
    for (std::size_t h = 0; h < horizon_; ++h) out.at(h, j) = at(h, *src);
  }
  return out;
}

const FeatureReference* ReferenceModel::find(const std::string& feature_id) const {
  for (const auto& f : features) {
    if (f.feature_id == feature_id) return &f;
  }
  return nullptr;
}

std::vector<std::string> ReferenceModel::feature_ids() const {
  std::vector<std::string> ids;
  ids.reserve(features.size());
  for (const auto& f : features) ids.push_back(f.feature_id);
  return ids;
}

std::map<std::string, HourlyMatrix> bucket_all_hourly(const ObservationTable& obs, std::size_t horizon) {
  std::map<std::string, HourlyMatrix> out;
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t j = 0; j < obs.features.size(); ++j) column.emplace(obs.features[j], j);

  for (const auto& id : obs.patients()) out.emplace(id, HourlyMatrix(id, horizon, obs.features));

  // Last-wins by time; equal times resolve to the later row.
  std::map<std::string, std::vector<double>> best_hour;
  for (auto& [id, m] : out) best_hour.emplace(id, std::vector<double>(horizon * obs.features.size(), -1.0));

  for (const auto& row : obs.rows) {
    const auto col = column.find(row.feature_id);
    if (col == column.end()) continue;
    if (row.hour < 0.0) continue;
    const double bucket = std::floor(row.hour);
    if (bucket >= static_cast<double>(horizon)) continue;
    const auto h = static_cast<std::size_t>(bucket);
    auto& stamps = best_hour.at(row.patient_id);
    const std::size_t slot = h * obs.features.size() + col->second;
    if (row.hour >= stamps[slot]) {
      stamps[slot] = row.hour;
      out.at(row.patient_id).at(h, col->second) = row.value;
    }
  }
  return out;
}

namespace {

double present_mean(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

HourlyMatrix bucket_hourly(const ObservationTable& obs, const std::string& patient_id, std::size_t horizon) {
  const bool known = obs.labels.contains(patient_id) ||
                     std::any_of(obs.rows.begin(), obs.rows.end(),
                                 [&](const Observation& o) { return o.patient_id == patient_id; });
  if (!known) throw Error(ErrorKind::NotFound, "patient '" + patient_id + "' not in observation table");

  ObservationTable single;
  single.features = obs.features;
  for (const auto& row : obs.rows) {
    if (row.patient_id == patient_id) single.rows.push_back(row);
  }
  single.labels[patient_id] = obs.cohort_of(patient_id);
  return bucket_all_hourly(single, horizon).at(patient_id);
}

SparseDropResult drop_sparse_features(const ObservationTable& obs, double threshold, std::size_t horizon) {
  const auto matrices = bucket_all_hourly(obs, horizon);
  const double total = static_cast<double>(matrices.size() * horizon);

  SparseDropResult result;
  result.table.labels = obs.labels;
  std::set<std::string> dropped;
  for (std::size_t j = 0; j < obs.features.size(); ++j) {
    std::size_t present = 0;
    for (const auto& [id, m] : matrices) present += m.present_count(j);
    const double missing = total > 0.0 ? 1.0 - static_cast<double>(present) / total : 0.0;
    if (total > 0.0 && missing > threshold) {
      dropped.insert(obs.features[j]);
      result.dropped.push_back({obs.features[j], missing, threshold, "dataset"});
    } else {
      result.table.features.push_back(obs.features[j]);
    }
  }
  for (const auto& row : obs.rows) {
    if (!dropped.contains(row.feature_id)) result.table.rows.push_back(row);
  }
  return result;
}

HourlyMatrix patient_mean_impute(const HourlyMatrix& matrix, double min_present) {
  HourlyMatrix out = matrix;
  if (matrix.horizon() == 0) return out;
  for (std::size_t j = 0; j < matrix.n_features(); ++j) {
    std::vector<double> present;
    for (std::size_t h = 0; h < matrix.horizon(); ++h) {
      if (const auto& v = matrix.at(h, j)) present.push_back(*v);
    }
    if (present.empty()) continue;
    const double frac = static_cast<double>(present.size()) / static_cast<double>(matrix.horizon());
    if (frac < min_present) continue;
    const double mean = present_mean(present);
    for (std::size_t h = 0; h < matrix.horizon(); ++h) {
      if (!out.at(h, j)) out.at(h, j) = mean;
    }
  }
  return out;
}

CohortImputeResult cohort_mean_impute(const std::vector<HourlyMatrix>& matrices,
                                      const std::map<std::string, Cohort>& labels, double sparse_threshold) {
  CohortImputeResult result;
  if (matrices.empty()) return result;
  const std::vector<std::string>& features = matrices.front().features();

  std::vector<Cohort> cohort_of;
  cohort_of.reserve(matrices.size());
  for (const auto& m : matrices) {
    if (m.features() != features) throw Error(ErrorKind::InvalidInput, "matrices do not share one feature set");
    const auto it = labels.find(m.patient_id());
    if (it == labels.end() || it->second == Cohort::Unlabeled) {
      throw Error(ErrorKind::InvalidInput, "patient '" + m.patient_id() + "' has no cohort label");
    }
    cohort_of.push_back(it->second);
  }

  constexpr std::array<Cohort, 2> kCohorts{Cohort::Control, Cohort::Treatment};
  // sums[c][j], present[c][j], cells[c]
  std::array<std::vector<double>, 2> sums{std::vector<double>(features.size()), std::vector<double>(features.size())};
  std::array<std::vector<std::size_t>, 2> present{std::vector<std::size_t>(features.size()),
                                                  std::vector<std::size_t>(features.size())};
  std::array<std::size_t, 2> cells{0, 0};
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const std::size_t c = cohort_of[k] == Cohort::Control ? 0 : 1;
    cells[c] += matrices[k].horizon();
    for (std::size_t j = 0; j < features.size(); ++j) {
      for (std::size_t h = 0; h < matrices[k].horizon(); ++h) {
        if (const auto& v = matrices[k].at(h, j)) {
          sums[c][j] += *v;
          ++present[c][j];
        }
      }
    }
  }

  std::vector<std::string> keep;
  std::vector<std::size_t> keep_index;
  for (std::size_t j = 0; j < features.size(); ++j) {
    bool drop = false;
    double worst = 0.0;
    for (std::size_t c = 0; c < kCohorts.size(); ++c) {
      if (cells[c] == 0) continue;
      const double missing = 1.0 - static_cast<double>(present[c][j]) / static_cast<double>(cells[c]);
      worst = std::max(worst, missing);
      if (missing > sparse_threshold) drop = true;
    }
    if (drop) {
      result.dropped.push_back({features[j], worst, sparse_threshold, "cohort"});
    } else {
      keep.push_back(features[j]);
      keep_index.push_back(j);
    }
  }

  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const std::size_t c = cohort_of[k] == Cohort::Control ? 0 : 1;
    HourlyMatrix out = matrices[k].select_features(keep);
    for (std::size_t jj = 0; jj < keep.size(); ++jj) {
      const std::size_t j = keep_index[jj];
      for (std::size_t h = 0; h < out.horizon(); ++h) {
        if (out.at(h, jj)) continue;
        if (present[c][j] == 0) {
          throw Error(ErrorKind::ImputationImpossible,
                      "feature '" + keep[jj] + "' has no observed values in the patient's cohort");
        }
        out.at(h, jj) = sums[c][j] / static_cast<double>(present[c][j]);
      }
    }
    result.matrices.push_back(std::move(out));
  }
  return result;
}

ReferenceModel build_reference(const std::vector<HourlyMatrix>& control_matrices, const ReferenceBuildOptions& options) {
  std::vector<const HourlyMatrix*> used;
  for (const auto& m : control_matrices) {
    if (!options.exclude_patients.contains(m.patient_id())) used.push_back(&m);
  }
  if (used.empty()) throw Error(ErrorKind::InvalidInput, "no control patients to build a reference from");
  const std::vector<std::string>& features = used.front()->features();
  if (features.empty()) throw Error(ErrorKind::InvalidInput, "reference needs at least one feature");

  ReferenceModel model;
  model.metadata.schema_version = ReferenceModel::kSchemaVersion;
  model.metadata.features = features;
  model.metadata.excluded_patients.assign(options.exclude_patients.begin(), options.exclude_patients.end());

  for (std::size_t j = 0; j < features.size(); ++j) {
    std::vector<double> pooled;
    for (const HourlyMatrix* m : used) {
      if (m->features() != features) throw Error(ErrorKind::InvalidInput, "matrices do not share one feature set");
      for (std::size_t h = 0; h < m->horizon(); ++h) {
        const auto& v = m->at(h, j);
        if (!v) throw Error(ErrorKind::InvalidInput, "matrix for '" + m->patient_id() + "' is not dense");
        pooled.push_back(*v);
      }
    }
    // Sorted so the result depends only on the pooled multiset, not patient order.
    std::sort(pooled.begin(), pooled.end());
    const double h = silverman_bandwidth(pooled);
    const Grid grid = build_grid(pooled, h, options.grid_points);
    FeatureReference ref{features[j], kde_on_grid(pooled, h, grid).density, h, pooled.size(), 0.0, 0.0};
    const double n = static_cast<double>(pooled.size());
    ref.sample_mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : pooled) ss += (v - ref.sample_mean) * (v - ref.sample_mean);
    ref.sample_sd = pooled.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    model.features.push_back(std::move(ref));
  }
  return model;
}

PipelineResult build_reference_pipeline(const ObservationTable& obs, const PipelineOptions& options) {
  PipelineResult result;
  SparseDropResult stage1 = drop_sparse_features(obs, options.dataset_missing_threshold, options.horizon);
  result.dropped = stage1.dropped;

  std::vector<HourlyMatrix> matrices;
  std::map<std::string, Cohort> labels;
  auto bucketed = bucket_all_hourly(stage1.table, options.horizon);
  for (auto& [id, m] : bucketed) {
    const Cohort c = obs.cohort_of(id);
    if (c == Cohort::Unlabeled) continue;
    labels[id] = c;
    matrices.push_back(patient_mean_impute(m, options.patient_min_present));
  }
  const bool any_control = std::any_of(labels.begin(), labels.end(), [&](const auto& kv) {
    return kv.second == Cohort::Control && !options.build.exclude_patients.contains(kv.first);
  });
  if (!any_control) throw Error(ErrorKind::InvalidInput, "input contains no control-labeled patients");

  CohortImputeResult stage3 = cohort_mean_impute(matrices, labels, options.cohort_missing_threshold);
  result.dropped.insert(result.dropped.end(), stage3.dropped.begin(), stage3.dropped.end());

  std::vector<HourlyMatrix> controls;
  for (auto& m : stage3.matrices) {
    if (labels.at(m.patient_id()) == Cohort::Control) controls.push_back(std::move(m));
  }
  result.model = build_reference(controls, options.build);
  auto& meta = result.model.metadata;
  meta.thresholds = {{"dataset_missing_threshold", options.dataset_missing_threshold},
                     {"patient_min_present", options.patient_min_present},
                     {"cohort_missing_threshold", options.cohort_missing_threshold},
                     {"horizon_hours", static_cast<double>(options.horizon)},
                     {"grid_points", static_cast<double>(options.build.grid_points)}};
  meta.source_rows = obs.rows.size();
  meta.created = options.created.empty() ? utc_now() : options.created;
  return result;
}

HourlyMatrix prepare_for_scoring(const HourlyMatrix& bucketed, const std::vector<std::string>& features,
                                 double min_present) {
  HourlyMatrix out(bucketed.patient_id(), bucketed.horizon(), features);
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto src = bucketed.feature_index(features[j]);
    if (!src) continue;
    for (std::size_t h = 0; h < out.horizon(); ++h) out.at(h, j) = bucketed.at(h, *src);
  }
  return patient_mean_impute(out, min_present);
}

}  // namespace jsdscore
