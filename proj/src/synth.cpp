#include "jsdscore/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "jsdscore/error.hpp"

namespace jsdscore {

SynthConfig SynthConfig::clinical_default() {
  SynthConfig config;
  // Vital signs, temperature, white cell count, creatinine, bilirubin and GCS
  // follow the control-group means/SDs of the study cohort; other labs use
  // typical adult ICU values.
  struct Row {
    const char* id;
    double mean;
    double sd;
  };
  static constexpr Row kRows[] = {
      {"gcs_total", 14.6, 0.7},      {"spo2", 96.5, 2.0},         {"heart_rate", 86.7, 16.2},
      {"resp_rate", 18.5, 3.0},      {"temperature", 98.4, 0.9},  {"alt", 35.0, 20.0},
      {"albumin", 3.2, 0.6},         {"alk_phos", 90.0, 35.0},    {"anion_gap", 10.0, 3.0},
      {"ast", 40.0, 25.0},           {"bicarbonate", 24.0, 3.0},  {"bilirubin", 0.8, 0.3},
      {"bun", 18.0, 9.0},            {"calcium", 8.6, 0.6},       {"chloride", 104.0, 4.0},
      {"creatinine", 0.9, 0.3},      {"glucose", 130.0, 35.0},    {"hematocrit", 32.0, 5.0},
      {"hemoglobin", 10.5, 1.8},     {"inr", 1.2, 0.2},           {"magnesium", 2.0, 0.25},
      {"platelets", 220.0, 80.0},    {"potassium", 4.0, 0.5},     {"protein", 6.3, 0.8},
      {"prothrombin_time", 14.0, 2.0}, {"sodium", 139.0, 4.0},    {"wbc", 10.2, 3.5},
  };
  for (const Row& r : kRows) {
    SynthFeature f;
    f.id = r.id;
    f.mean = r.mean;
    f.sd = r.sd;
    config.features.push_back(std::move(f));
  }
  config.drift = DriftSpec{24, {"calcium", "hemoglobin", "sodium", "wbc", "temperature", "heart_rate"}, 2.0};
  return config;
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidInput, "synth config: " + msg); };
  if (features.empty()) fail("no features configured");
  if (horizon < 2) fail("horizon must be at least 2");
  if (n_control + n_treatment == 0) fail("no patients requested");
  std::set<std::string> ids;
  for (const auto& f : features) {
    if (f.id.empty()) fail("empty feature id");
    if (!ids.insert(f.id).second) fail("duplicate feature '" + f.id + "'");
    if (!std::isfinite(f.mean)) fail("mean of '" + f.id + "' is not finite");
    if (!(f.sd > 0.0) || !std::isfinite(f.sd)) fail("sd of '" + f.id + "' must be positive");
    if (!(f.missingness >= 0.0 && f.missingness < 1.0)) fail("missingness of '" + f.id + "' must lie in [0, 1)");
    if (f.treatment_mean && !std::isfinite(*f.treatment_mean)) fail("treatment mean of '" + f.id + "' is not finite");
    if (f.treatment_sd && !(*f.treatment_sd > 0.0)) fail("treatment sd of '" + f.id + "' must be positive");
  }
  if (drift.onset_hour >= horizon) fail("onset hour must be below the horizon");
  if (!std::isfinite(drift.shift_sds)) fail("shift must be finite");
  for (const auto& id : drift.shifted_features) {
    if (!ids.contains(id)) fail("shifted feature '" + id + "' is not configured");
  }
}

namespace {

std::string patient_name(char prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%04zu", prefix, index + 1);
  return buf;
}

void generate_patient(const SynthConfig& config, bool treatment, std::size_t index, ObservationTable& out) {
  const std::string id = patient_name(treatment ? 't' : 'c', index);
  out.labels[id] = treatment ? Cohort::Treatment : Cohort::Control;

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(treatment ? 1 : 0), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::set<std::string> shifted(config.drift.shifted_features.begin(), config.drift.shifted_features.end());
  for (std::size_t h = 0; h < config.horizon; ++h) {
    const bool post_onset = treatment && h >= config.drift.onset_hour;
    for (const auto& f : config.features) {
      // Every draw happens regardless of missingness so that streams stay aligned.
      const double u_missing = unit(rng);
      const double offset = 0.95 * unit(rng);
      const double z = normal(rng);
      double mean = f.mean;
      double sd = f.sd;
      if (post_onset) {
        if (f.treatment_mean || f.treatment_sd) {
          mean = f.treatment_mean.value_or(f.mean);
          sd = f.treatment_sd.value_or(f.sd);
        } else if (shifted.contains(f.id)) {
          mean = f.mean + config.drift.shift_sds * f.sd;
        }
      }
      if (u_missing < f.missingness) continue;
      out.rows.push_back({id, static_cast<double>(h) + offset, f.id, mean + sd * z});
    }
  }
}

}  // namespace

ObservationTable generate_cohort(const SynthConfig& config) {
  config.validate();
  ObservationTable table;
  for (const auto& f : config.features) table.features.push_back(f.id);
  for (std::size_t i = 0; i < config.n_control; ++i) generate_patient(config, false, i, table);
  for (std::size_t i = 0; i < config.n_treatment; ++i) generate_patient(config, true, i, table);
  return table;
}

}  // namespace jsdscore
