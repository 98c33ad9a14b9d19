#include "jsdscore/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "jsdscore/error.hpp"

namespace jsdscore {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

double parse_finite(std::string_view field, std::size_t line, const char* what) {
  const auto v = parse_double(field);
  if (!v) throw ParseError(line, std::string("malformed ") + what + " '" + std::string(field) + "'");
  if (!std::isfinite(*v)) throw ParseError(line, std::string(what) + " must be finite, got '" + std::string(field) + "'");
  return *v;
}

Cohort parse_cohort(std::string_view s) {
  if (s == "control") return Cohort::Control;
  if (s == "treatment") return Cohort::Treatment;
  return Cohort::Unlabeled;
}

// Reads lines, skipping blank ones; returns false at end of input.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

Observation parse_fields(const std::vector<std::string_view>& fields, std::size_t line_no,
                         const FeatureRegistry& registry) {
  Observation obs;
  obs.patient_id = std::string(fields[0]);
  if (obs.patient_id.empty()) throw ParseError(line_no, "empty patient_id");
  obs.hour = parse_finite(fields[1], line_no, "hour");
  if (obs.hour < 0.0) throw ParseError(line_no, "hour must be non-negative");
  obs.feature_id = std::string(fields[2]);
  if (!registry.contains(obs.feature_id)) {
    throw Error(ErrorKind::UnknownFeature, "line " + std::to_string(line_no) + ": unknown feature '" + obs.feature_id + "'");
  }
  obs.value = parse_finite(fields[3], line_no, "value");
  return obs;
}

}  // namespace

Observation parse_observation_line(std::string_view line, std::size_t line_no, const FeatureRegistry& registry) {
  const auto fields = split_csv(line);
  if (fields.size() != 4 && fields.size() != 5) {
    throw ParseError(line_no, "expected 4 or 5 fields, got " + std::to_string(fields.size()));
  }
  return parse_fields(fields, line_no, registry);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string_view cohort_name(Cohort c) noexcept {
  switch (c) {
    case Cohort::Control: return "control";
    case Cohort::Treatment: return "treatment";
    case Cohort::Unlabeled: break;
  }
  return "";
}

ObservationTable parse_observations(std::istream& in, const FeatureRegistry& registry) {
  ObservationTable table;
  table.features = registry.ids();
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw ParseError(1, "missing header 'patient_id,hour,feature,value[,cohort]'");

  const auto header = split_csv(line);
  const bool has_cohort = header.size() == 5 && header[4] == "cohort";
  if (!(header.size() == 4 || has_cohort) || header[0] != "patient_id" || header[1] != "hour" ||
      header[2] != "feature" || header[3] != "value") {
    throw ParseError(line_no, "expected header 'patient_id,hour,feature,value[,cohort]'");
  }

  while (next_line(in, line, line_no)) {
    const auto fields = split_csv(line);
    if (fields.size() != 4 && !(has_cohort && fields.size() == 5)) {
      throw ParseError(line_no, "expected " + std::string(has_cohort ? "4 or 5" : "4") + " fields, got " +
                                    std::to_string(fields.size()));
    }
    Observation obs = parse_fields(fields, line_no, registry);

    const Cohort c = fields.size() == 5 ? parse_cohort(fields[4]) : Cohort::Unlabeled;
    if (c != Cohort::Unlabeled) {
      const auto [it, inserted] = table.labels.emplace(obs.patient_id, c);
      if (!inserted && it->second != c) {
        throw ParseError(line_no, "patient '" + obs.patient_id + "' is labeled with two different cohorts");
      }
    }
    table.rows.push_back(std::move(obs));
  }
  return table;
}

void write_observations(const ObservationTable& table, std::ostream& out) {
  const bool labeled = std::any_of(table.labels.begin(), table.labels.end(),
                                   [](const auto& kv) { return kv.second != Cohort::Unlabeled; });
  out << "patient_id,hour,feature,value" << (labeled ? ",cohort" : "") << '\n';
  for (const auto& row : table.rows) {
    out << row.patient_id << ',' << format_double(row.hour) << ',' << row.feature_id << ','
        << format_double(row.value);
    if (labeled) out << ',' << cohort_name(table.cohort_of(row.patient_id));
    out << '\n';
  }
}

std::string save_reference(const ReferenceModel& model) {
  json doc;
  doc["schema_version"] = model.metadata.schema_version;
  doc["metadata"] = {
      {"features", model.metadata.features},
      {"thresholds", model.metadata.thresholds},
      {"created", model.metadata.created},
      {"source_rows", model.metadata.source_rows},
      {"excluded_patients", model.metadata.excluded_patients},
  };
  json features = json::array();
  for (const auto& f : model.features) {
    features.push_back({
        {"id", f.feature_id},
        {"grid", {{"lo", f.density.grid.lo()}, {"hi", f.density.grid.hi()}, {"n_points", f.density.grid.n_points()}}},
        {"bandwidth", f.bandwidth},
        {"n_samples", f.n_samples},
        {"sample_mean", f.sample_mean},
        {"sample_sd", f.sample_sd},
        {"density", f.density.values},
    });
  }
  doc["features"] = std::move(features);
  return doc.dump(1);
}

ReferenceModel load_reference(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("reference model is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw Error(ErrorKind::IncompatibleModel, "reference model has no schema_version");
  }
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != ReferenceModel::kSchemaVersion) {
    throw Error(ErrorKind::IncompatibleModel, "unsupported schema_version " + doc["schema_version"].dump() +
                                                  " (expected " + std::to_string(ReferenceModel::kSchemaVersion) + ")");
  }

  ReferenceModel model;
  std::string context = "metadata";
  try {
    const json& meta = doc.at("metadata");
    model.metadata.schema_version = ReferenceModel::kSchemaVersion;
    model.metadata.features = meta.at("features").get<std::vector<std::string>>();
    model.metadata.thresholds = meta.at("thresholds").get<std::map<std::string, double>>();
    model.metadata.created = meta.at("created").get<std::string>();
    model.metadata.source_rows = meta.at("source_rows").get<std::size_t>();
    model.metadata.excluded_patients = meta.value("excluded_patients", std::vector<std::string>{});

    const json& features = doc.at("features");
    if (!features.is_array() || features.empty()) throw ParseError(0, "reference model has no features");
    for (const json& f : features) {
      context = "feature entry";
      const auto id = f.at("id").get<std::string>();
      context = "feature '" + id + "'";
      const json& g = f.at("grid");
      const auto n_points = g.at("n_points").get<std::size_t>();
      auto values = f.at("density").get<std::vector<double>>();
      if (values.size() != n_points) {
        throw ParseError(0, context + ": density has " + std::to_string(values.size()) + " values, expected " +
                                std::to_string(n_points));
      }
      if (std::any_of(values.begin(), values.end(), [](double v) { return !std::isfinite(v) || v < 0.0; })) {
        throw ParseError(0, context + ": density contains negative or non-finite values");
      }
      FeatureReference ref{id, DensityOnGrid{Grid(g.at("lo").get<double>(), g.at("hi").get<double>(), n_points),
                                             std::move(values)},
                           f.at("bandwidth").get<double>(), f.at("n_samples").get<std::size_t>(),
                           f.at("sample_mean").get<double>(), f.at("sample_sd").get<double>()};
      if (!(ref.bandwidth > 0.0)) throw ParseError(0, context + ": bandwidth must be positive");
      if (std::abs(trapezoid_integral(ref.density) - 1.0) > 1e-9) {
        throw ParseError(0, context + ": density does not integrate to 1");
      }
      if (model.find(id) != nullptr) throw ParseError(0, context + ": duplicate feature");
      model.features.push_back(std::move(ref));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(0, context + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(0, context + ": " + e.what());
  }
  return model;
}

void save_reference_file(const ReferenceModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "' for writing");
  out << save_reference(model) << '\n';
  if (!out) throw Error(ErrorKind::InvalidInput, "failed writing '" + path + "'");
}

ReferenceModel load_reference_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open reference model '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_reference(buffer.str());
}

std::string score_header(const std::vector<std::string>& features) {
  std::string s = "patient_id,hour,comprehensive,features_used";
  for (const auto& f : features) s += "," + f;
  return s;
}

std::string score_row(const ScoreRecord& record, const std::vector<std::string>& features) {
  std::string s = record.patient_id + "," + std::to_string(record.hour_index) + ",";
  if (record.comprehensive) s += format_double(*record.comprehensive);
  s += "," + std::to_string(record.features_used());
  for (const auto& f : features) {
    s += ",";
    if (const auto it = record.per_feature.entries.find(f); it != record.per_feature.entries.end()) {
      s += format_double(it->second);
    }
  }
  return s;
}

void write_scores(std::vector<ScoreRecord> records, const std::vector<std::string>& features, std::ostream& out) {
  std::stable_sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.patient_id, a.hour_index) < std::tie(b.patient_id, b.hour_index);
  });
  out << score_header(features) << '\n';
  for (const auto& r : records) out << score_row(r, features) << '\n';
}

ScoreTable parse_scores(std::istream& in) {
  ScoreTable table;
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw ParseError(1, "missing score header");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "patient_id" || header[1] != "hour" || header[2] != "comprehensive" ||
      header[3] != "features_used") {
    throw ParseError(line_no, "expected header 'patient_id,hour,comprehensive,features_used,...'");
  }
  for (std::size_t i = 4; i < header.size(); ++i) table.features.emplace_back(header[i]);

  while (next_line(in, line, line_no)) {
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    ScoreRecord r;
    r.patient_id = std::string(fields[0]);
    if (r.patient_id.empty()) throw ParseError(line_no, "empty patient_id");
    const double hour = parse_finite(fields[1], line_no, "hour");
    if (hour != std::floor(hour)) throw ParseError(line_no, "hour must be an integer");
    r.hour_index = static_cast<long>(hour);
    if (!fields[2].empty()) r.comprehensive = parse_finite(fields[2], line_no, "comprehensive score");
    for (std::size_t i = 4; i < fields.size(); ++i) {
      if (fields[i].empty()) {
        r.features_skipped.push_back(table.features[i - 4]);
      } else {
        r.per_feature.entries[table.features[i - 4]] = parse_finite(fields[i], line_no, "feature score");
      }
    }
    const double used = parse_finite(fields[3], line_no, "features_used");
    if (used != static_cast<double>(r.features_used())) {
      throw ParseError(line_no, "features_used does not match the number of per-feature scores");
    }
    table.records.push_back(std::move(r));
  }
  return table;
}

}  // namespace jsdscore
