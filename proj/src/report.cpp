#include "jsdscore/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "jsdscore/error.hpp"
#include "jsdscore/io.hpp"

namespace jsdscore {
namespace {

constexpr double kZ95 = 1.96;
const std::string kComprehensive = "comprehensive";

std::string group_of(const std::string& patient_id, const std::map<std::string, Cohort>& labels) {
  const auto it = labels.find(patient_id);
  if (it == labels.end() || it->second == Cohort::Unlabeled) return "unlabeled";
  return std::string(cohort_name(it->second));
}

std::vector<std::string> ordered_groups(const std::vector<ScoreRecord>& records,
                                        const std::map<std::string, Cohort>& labels) {
  std::set<std::string> present;
  for (const auto& r : records) present.insert(group_of(r.patient_id, labels));
  std::vector<std::string> out;
  for (const char* g : {"control", "treatment", "unlabeled"}) {
    if (present.contains(g)) out.emplace_back(g);
  }
  return out;
}

std::optional<double> series_value(const ScoreRecord& r, const std::string& series) {
  if (series == kComprehensive) return r.comprehensive;
  const auto it = r.per_feature.entries.find(series);
  if (it == r.per_feature.entries.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> all_series(const std::vector<std::string>& features) {
  std::vector<std::string> s{kComprehensive};
  s.insert(s.end(), features.begin(), features.end());
  return s;
}

}  // namespace

std::vector<ScoreDensity> score_densities(const std::vector<ScoreRecord>& records,
                                          const std::vector<std::string>& features,
                                          const std::map<std::string, Cohort>& labels, std::size_t grid_points) {
  std::vector<ScoreDensity> out;
  for (const auto& group : ordered_groups(records, labels)) {
    for (const auto& series : all_series(features)) {
      std::vector<double> samples;
      for (const auto& r : records) {
        if (group_of(r.patient_id, labels) != group) continue;
        if (const auto v = series_value(r, series)) samples.push_back(*v);
      }
      if (samples.empty()) continue;
      const double h = silverman_bandwidth(samples);
      const Grid grid = build_grid(samples, h, grid_points);
      out.push_back({group, series, samples.size(), kde_on_grid(samples, h, grid).density});
    }
  }
  return out;
}

std::vector<HourlyInterval> hourly_intervals(const std::vector<ScoreRecord>& records,
                                             const std::vector<std::string>& features,
                                             const std::map<std::string, Cohort>& labels) {
  std::vector<HourlyInterval> out;
  for (const auto& group : ordered_groups(records, labels)) {
    for (const auto& series : all_series(features)) {
      std::map<long, std::vector<double>> by_hour;
      for (const auto& r : records) {
        if (group_of(r.patient_id, labels) != group) continue;
        if (const auto v = series_value(r, series)) by_hour[r.hour_index].push_back(*v);
      }
      for (const auto& [hour, values] : by_hour) {
        const auto n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double half = values.size() > 1 ? kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        out.push_back({group, series, hour, values.size(), mean, mean - half, mean + half});
      }
    }
  }
  return out;
}

ReportFiles render_report(const std::vector<ScoreRecord>& records, const std::vector<std::string>& features,
                          const std::map<std::string, Cohort>& labels, const std::vector<std::string>& patients) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "no score records to report on");
  ReportFiles files;

  std::ostringstream dens;
  dens << "cohort,series,n_samples,x,density\n";
  for (const auto& d : score_densities(records, features, labels)) {
    for (std::size_t i = 0; i < d.density.values.size(); ++i) {
      dens << d.cohort << ',' << d.series << ',' << d.n_samples << ',' << format_double(d.density.grid.x(i)) << ','
           << format_double(d.density.values[i]) << '\n';
    }
  }
  files.densities = dens.str();

  std::ostringstream ci;
  ci << "cohort,series,hour,n,mean,ci_low,ci_high\n";
  for (const auto& row : hourly_intervals(records, features, labels)) {
    ci << row.cohort << ',' << row.series << ',' << row.hour << ',' << row.n << ',' << format_double(row.mean) << ','
       << format_double(row.ci_low) << ',' << format_double(row.ci_high) << '\n';
  }
  files.intervals = ci.str();

  std::set<std::string> wanted(patients.begin(), patients.end());
  for (const auto& p : patients) {
    const bool found = std::any_of(records.begin(), records.end(), [&](const ScoreRecord& r) { return r.patient_id == p; });
    if (!found) throw Error(ErrorKind::NotFound, "patient '" + p + "' has no score records");
  }
  std::vector<ScoreRecord> selected;
  for (const auto& r : records) {
    if (wanted.empty() || wanted.contains(r.patient_id)) selected.push_back(r);
  }
  std::stable_sort(selected.begin(), selected.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.patient_id, a.hour_index) < std::tie(b.patient_id, b.hour_index);
  });
  std::ostringstream traj;
  traj << "cohort," << score_header(features) << '\n';
  for (const auto& r : selected) traj << group_of(r.patient_id, labels) << ',' << score_row(r, features) << '\n';
  files.trajectories = traj.str();
  return files;
}

}  // namespace jsdscore
