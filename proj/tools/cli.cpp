#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "jsdscore/cohort.hpp"
#include "jsdscore/detector.hpp"
#include "jsdscore/error.hpp"
#include "jsdscore/io.hpp"
#include "jsdscore/registry.hpp"
#include "jsdscore/report.hpp"
#include "jsdscore/synth.hpp"

namespace jsdscore::cli {
namespace {

ObservationTable read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open observation file '" + path + "'");
  return parse_observations(in);
}

// Writes to `path`, or to `fallback` when path is empty.
template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    fallback.flush();
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "' for writing");
  fn(file);
  if (!file) throw Error(ErrorKind::InvalidInput, "failed writing '" + path + "'");
}

std::string creation_stamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool parse_number(std::string_view text, double& value) {
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && end == text.data() + text.size();
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t n_control = 200;
  std::size_t n_treatment = 20;
  std::size_t horizon = kDefaultHorizon;
  std::size_t onset = 24;
  double shift_sds = 2.0;
  std::vector<std::string> shifted;
  double missingness = 0.0;
  std::vector<std::string> feature_missingness;  // feature=rate
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  SynthConfig config = SynthConfig::clinical_default();
  config.n_control = a.n_control;
  config.n_treatment = a.n_treatment;
  config.horizon = a.horizon;
  config.drift.onset_hour = a.onset;
  config.drift.shift_sds = a.shift_sds;
  if (!a.shifted.empty()) config.drift.shifted_features = a.shifted;
  config.seed = a.seed;
  std::map<std::string, double> overrides;
  for (const auto& item : a.feature_missingness) {
    const auto eq = item.find('=');
    double rate = 0.0;
    if (eq == std::string::npos || !parse_number(std::string_view(item).substr(eq + 1), rate)) {
      throw Error(ErrorKind::InvalidInput, "--feature-missingness expects feature=rate, got '" + item + "'");
    }
    const std::string id = item.substr(0, eq);
    if (!FeatureRegistry::clinical_default().contains(id)) throw Error(ErrorKind::UnknownFeature, "unknown feature '" + id + "'");
    overrides[id] = rate;
  }
  for (auto& f : config.features) {
    f.missingness = a.missingness;
    if (const auto it = overrides.find(f.id); it != overrides.end()) f.missingness = it->second;
  }

  const ObservationTable table = generate_cohort(config);
  with_output(a.out, out, [&](std::ostream& os) { write_observations(table, os); });
  err << "synth: wrote " << table.rows.size() << " rows for " << table.patients().size() << " patients ("
      << a.n_control << " control, " << a.n_treatment << " treatment)\n";
  return kExitOk;
}

// ------------------------------------------------------- build-reference

struct BuildArgs {
  std::string in;
  std::string out;
  std::size_t grid_points = kDefaultGridPoints;
  std::vector<std::string> exclude;
  std::size_t horizon = kDefaultHorizon;
  double dataset_threshold = kDatasetMissingThreshold;
  double patient_min_present = kPatientMinPresent;
  double cohort_threshold = kCohortMissingThreshold;
};

int cmd_build_reference(const BuildArgs& a, std::ostream& err) {
  const ObservationTable table = read_observations(a.in);
  PipelineOptions options;
  options.horizon = a.horizon;
  options.dataset_missing_threshold = a.dataset_threshold;
  options.patient_min_present = a.patient_min_present;
  options.cohort_missing_threshold = a.cohort_threshold;
  options.build.grid_points = a.grid_points;
  options.build.exclude_patients.insert(a.exclude.begin(), a.exclude.end());
  options.created = creation_stamp();

  const PipelineResult result = build_reference_pipeline(table, options);
  for (const auto& d : result.dropped) {
    err << "build-reference: dropped feature '" << d.feature_id << "' (" << d.stage << " stage: missing fraction "
        << format_double(d.missing_fraction) << " > threshold " << format_double(d.threshold) << ")\n";
  }
  save_reference_file(result.model, a.out);
  err << "build-reference: wrote " << result.model.features.size() << " feature densities to " << a.out << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ score

struct ScoreArgs {
  std::string model;
  std::string in;
  std::string out;
  std::size_t horizon = kDefaultHorizon;
};

int cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  auto model = std::make_shared<const ReferenceModel>(load_reference_file(a.model));
  const ObservationTable table = read_observations(a.in);
  const std::vector<std::string> features = model->feature_ids();

  std::set<std::string> observed;
  std::map<std::string, double> last_hour;
  for (const auto& row : table.rows) {
    observed.insert(row.feature_id);
    auto [it, inserted] = last_hour.emplace(row.patient_id, row.hour);
    if (!inserted) it->second = std::max(it->second, row.hour);
  }
  std::vector<std::string> missing;
  for (const auto& f : features) {
    if (!observed.contains(f)) missing.push_back(f);
  }
  if (!missing.empty() && !table.rows.empty()) {
    err << "score: feature-set mismatch; model features absent from input: " << join(missing) << '\n';
    return kExitDataError;
  }
  std::vector<std::string> extra;
  for (const auto& f : observed) {
    if (model->find(f) == nullptr) extra.push_back(f);
  }
  if (!extra.empty()) err << "score: ignoring input features not in the model: " << join(extra) << '\n';

  const auto bucketed = bucket_all_hourly(table, a.horizon);
  std::vector<ScoreRecord> records;
  for (const auto& [id, matrix] : bucketed) {
    // Hours after the patient's last observation are not scored.
    const auto it = last_hour.find(id);
    const std::size_t hours =
        it == last_hour.end() ? 0 : std::min<std::size_t>(a.horizon, static_cast<std::size_t>(std::floor(it->second)) + 1);
    if (hours < 2) {
      err << "score: warning: patient '" << id << "' has fewer than two hours of data; no scores\n";
      continue;
    }
    auto patient = score_patient(model, prepare_for_scoring(matrix.truncated(hours), features));
    records.insert(records.end(), std::make_move_iterator(patient.begin()), std::make_move_iterator(patient.end()));
  }
  with_output(a.out, out, [&](std::ostream& os) { write_scores(records, features, os); });
  err << "score: wrote " << records.size() << " score rows\n";
  return kExitOk;
}

// ----------------------------------------------------------------- stream

constexpr std::string_view kEndOfHour = "end-of-hour";

struct PendingHour {
  HourValues values;
  std::map<std::string, double> stamps;  // last-wins by observation time
};

struct StreamPatient {
  std::unique_ptr<Scorer> scorer;
  std::map<long, PendingHour> pending;
};

int cmd_stream(const std::string& model_path, std::istream& in, std::ostream& out, std::ostream& err) {
  auto model = std::make_shared<const ReferenceModel>(load_reference_file(model_path));
  const std::vector<std::string> features = model->feature_ids();
  std::vector<FeatureInfo> infos;
  for (const auto& f : features) infos.push_back({f, f, ""});
  const FeatureRegistry registry(infos);

  std::map<std::string, StreamPatient> patients;
  auto flush_patient = [&](const std::string& id, StreamPatient& p) {
    for (auto& [hour, pending] : p.pending) {
      try {
        while (p.scorer->last_hour_index() + 1 < hour) {
          auto gap = p.scorer->push_hour(p.scorer->last_hour_index() + 1, {});
          if (gap && !gap->comprehensive) {
            err << "stream: patient '" << id << "' hour " << gap->hour_index << ": no features available\n";
          }
        }
        auto record = p.scorer->push_hour(hour, pending.values);
        if (record && record->comprehensive) {
          out << score_row(*record, features) << '\n';
        } else if (record) {
          err << "stream: patient '" << id << "' hour " << hour << ": no features available\n";
        }
      } catch (const Error& e) {
        err << "stream: error: patient '" << id << "': " << e.what() << '\n';
      }
    }
    p.pending.clear();
  };

  out << score_header(features) << '\n' << std::flush;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("patient_id,", 0) == 0) continue;

    if (line.rfind(kEndOfHour, 0) == 0) {
      const std::string rest = line.size() > kEndOfHour.size() + 1 ? line.substr(kEndOfHour.size() + 1) : "";
      for (auto& [id, p] : patients) {
        if (rest.empty() || rest == id) flush_patient(id, p);
      }
      out << std::flush;
      continue;
    }

    try {
      const Observation obs = parse_observation_line(line, line_no, registry);
      auto& p = patients[obs.patient_id];
      if (!p.scorer) p.scorer = std::make_unique<Scorer>(model, obs.patient_id);
      const auto bucket = static_cast<long>(std::floor(obs.hour));
      if (bucket <= p.scorer->last_hour_index()) {
        throw Error(ErrorKind::OutOfOrder, "patient '" + obs.patient_id + "': hour " + format_double(obs.hour) +
                                               " falls in an already scored hour (" +
                                               std::to_string(p.scorer->last_hour_index()) + ")");
      }
      PendingHour& slot = p.pending[bucket];
      const auto [it, inserted] = slot.stamps.emplace(obs.feature_id, obs.hour);
      if (inserted || obs.hour >= it->second) {
        it->second = obs.hour;
        slot.values[obs.feature_id] = obs.value;
      }
    } catch (const Error& e) {
      err << "stream: error: line " << line_no << ": " << e.what() << '\n';
    }
  }
  return kExitOk;
}

// ----------------------------------------------------------------- report

struct ReportArgs {
  std::string scores;
  std::string out_dir;
  std::string observations;
  std::vector<std::string> patients;
};

int cmd_report(const ReportArgs& a, std::ostream& err) {
  std::ifstream in(a.scores);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open score file '" + a.scores + "'");
  const ScoreTable scores = parse_scores(in);
  if (scores.records.empty()) {
    err << "report: score file '" << a.scores << "' has no records\n";
    return kExitDataError;
  }
  std::map<std::string, Cohort> labels;
  if (!a.observations.empty()) labels = read_observations(a.observations).labels;

  const ReportFiles files = render_report(scores.records, scores.features, labels, a.patients);
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  for (const auto& [name, body] : {std::pair{"score_density.csv", &files.densities},
                                   std::pair{"hourly_ci.csv", &files.intervals},
                                   std::pair{"patient_trajectories.csv", &files.trajectories}}) {
    with_output((dir / name).string(), err, [&](std::ostream& os) { os << *body; });
  }
  err << "report: wrote score_density.csv, hourly_ci.csv, patient_trajectories.csv to " << a.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Jensen-Shannon divergence scoring of clinical time series against a reference cohort", "jsdscore"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic cohort as observation CSV");
  synth_cmd->add_option("--control", synth.n_control, "Number of control patients")->capture_default_str();
  synth_cmd->add_option("--treatment", synth.n_treatment, "Number of treatment patients")->capture_default_str();
  synth_cmd->add_option("--horizon", synth.horizon, "Hours per patient")->capture_default_str()->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--onset", synth.onset, "Drift onset hour for treatment patients")->capture_default_str();
  synth_cmd->add_option("--shift-sds", synth.shift_sds, "Step shift in standard deviations")->capture_default_str();
  synth_cmd->add_option("--shifted", synth.shifted, "Features receiving the shift")->delimiter(',');
  synth_cmd->add_option("--missingness", synth.missingness, "Per-cell missing probability for every feature")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.999999));
  synth_cmd->add_option("--feature-missingness", synth.feature_missingness, "Per-feature override, feature=rate")
      ->delimiter(',');
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output CSV (default: standard output)");

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-reference", "Build the control-cohort reference model");
  build_cmd->add_option("--in", build.in, "Observation CSV with cohort labels")->required();
  build_cmd->add_option("--out", build.out, "Reference model output path")->required();
  build_cmd->add_option("--grid-points", build.grid_points, "Grid points per feature density")
      ->capture_default_str()
      ->check(CLI::Range(static_cast<std::size_t>(kMinGridPoints), static_cast<std::size_t>(1) << 20));
  build_cmd->add_option("--exclude-patient", build.exclude, "Leave a patient out of the pooled samples");
  build_cmd->add_option("--horizon", build.horizon, "Hours per patient")->capture_default_str()->check(CLI::Range(2, 100000));
  build_cmd->add_option("--dataset-threshold", build.dataset_threshold, "Dataset-level missing fraction above which a feature is dropped")
      ->capture_default_str();
  build_cmd->add_option("--patient-min-present", build.patient_min_present, "Minimum present fraction for patient-level imputation")
      ->capture_default_str();
  build_cmd->add_option("--cohort-threshold", build.cohort_threshold, "Cohort-level missing fraction above which a feature is dropped")
      ->capture_default_str();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Batch-score every patient in an observation CSV");
  score_cmd->add_option("--model", score.model, "Reference model")->required();
  score_cmd->add_option("--in", score.in, "Observation CSV")->required();
  score_cmd->add_option("--out", score.out, "Score CSV (default: standard output)");
  score_cmd->add_option("--horizon", score.horizon, "Hours per patient")->capture_default_str()->check(CLI::Range(2, 100000));

  std::string stream_model;
  auto* stream_cmd = app.add_subcommand("stream", "Score hourly observations read from standard input");
  stream_cmd->add_option("--model", stream_model, "Reference model")->required();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Emit plot-ready CSVs from a score file");
  report_cmd->add_option("--scores", report.scores, "Score CSV")->required();
  report_cmd->add_option("--out", report.out_dir, "Output directory")->required();
  report_cmd->add_option("--observations", report.observations, "Observation CSV providing cohort labels");
  report_cmd->add_option("--patient", report.patients, "Patients for the trajectory file (default: all)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (*synth_cmd) {
      try {
        return cmd_synth(synth, out, err);
      } catch (const Error& e) {
        // Generator settings are flags, so a rejected configuration is a usage error.
        if (e.kind() != ErrorKind::InvalidInput && e.kind() != ErrorKind::UnknownFeature) throw;
        err << "error: " << e.what() << "\n\n" << synth_cmd->help();
        return kExitUsage;
      }
    }
    if (*build_cmd) return cmd_build_reference(build, err);
    if (*score_cmd) return cmd_score(score, out, err);
    if (*stream_cmd) return cmd_stream(stream_model, in, out, err);
    if (*report_cmd) return cmd_report(report, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace jsdscore::cli
