#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "jsdscore/cohort.hpp"
#include "jsdscore/detector.hpp"

namespace jsdscore {

/// KDE of one cohort's hourly scores for one series ("comprehensive" or a feature id).
struct ScoreDensity {
  std::string cohort;
  std::string series;
  std::size_t n_samples = 0;
  DensityOnGrid density;
};

/// Per-hour cohort mean with a normal-approximation 95% interval.
struct HourlyInterval {
  std::string cohort;
  std::string series;
  long hour = 0;
  std::size_t n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

std::vector<ScoreDensity> score_densities(const std::vector<ScoreRecord>& records,
                                          const std::vector<std::string>& features,
                                          const std::map<std::string, Cohort>& labels,
                                          std::size_t grid_points = 256);

std::vector<HourlyInterval> hourly_intervals(const std::vector<ScoreRecord>& records,
                                             const std::vector<std::string>& features,
                                             const std::map<std::string, Cohort>& labels);

struct ReportFiles {
  std::string densities;     ///< score_density.csv
  std::string intervals;     ///< hourly_ci.csv
  std::string trajectories;  ///< patient_trajectories.csv
};

/// Renders the three plot-data CSVs. An empty `patients` list selects every patient.
ReportFiles render_report(const std::vector<ScoreRecord>& records,
                          const std::vector<std::string>& features,
                          const std::map<std::string, Cohort>& labels,
                          const std::vector<std::string>& patients);

}  // namespace jsdscore
