#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "jsdscore/cohort.hpp"
#include "jsdscore/detector.hpp"
#include "jsdscore/registry.hpp"

namespace jsdscore {

// Observation CSV: header `patient_id,hour,feature,value[,cohort]`.

ObservationTable parse_observations(std::istream& in,
                                    const FeatureRegistry& registry = FeatureRegistry::clinical_default());
/// One `patient_id,hour,feature,value[,cohort]` record; the cohort field is ignored.
Observation parse_observation_line(std::string_view line, std::size_t line_no, const FeatureRegistry& registry);
void write_observations(const ObservationTable& table, std::ostream& out);

std::string_view cohort_name(Cohort c) noexcept;

// Reference model JSON document.

std::string save_reference(const ReferenceModel& model);
ReferenceModel load_reference(std::string_view document);
void save_reference_file(const ReferenceModel& model, const std::string& path);
ReferenceModel load_reference_file(const std::string& path);

// Score CSV: header `patient_id,hour,comprehensive,features_used,<features...>`.
// Skipped features are empty cells. Numbers use the shortest round-trip form.

std::string score_header(const std::vector<std::string>& features);
std::string score_row(const ScoreRecord& record, const std::vector<std::string>& features);
/// Rows sorted by (patient_id, hour).
void write_scores(std::vector<ScoreRecord> records, const std::vector<std::string>& features,
                  std::ostream& out);

struct ScoreTable {
  std::vector<std::string> features;
  std::vector<ScoreRecord> records;
};
ScoreTable parse_scores(std::istream& in);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace jsdscore
