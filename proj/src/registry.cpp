#include "jsdscore/registry.hpp"

#include <set>

#include "jsdscore/error.hpp"

namespace jsdscore {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::NoFeaturesAvailable: return "NoFeaturesAvailable";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::ImputationImpossible: return "ImputationImpossible";
    case ErrorKind::OutOfOrder: return "OutOfOrder";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IncompatibleModel: return "IncompatibleModel";
  }
  return "Error";
}

FeatureRegistry::FeatureRegistry(std::vector<FeatureInfo> features) : features_(std::move(features)) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.id.empty()) throw Error(ErrorKind::InvalidInput, "feature id must not be empty");
    if (!seen.insert(f.id).second) throw Error(ErrorKind::InvalidInput, "duplicate feature id '" + f.id + "'");
  }
}

const FeatureRegistry& FeatureRegistry::clinical_default() {
  static const FeatureRegistry registry({
      // vitals
      {"gcs_total", "Glasgow Coma Score total", "points"},
      {"spo2", "Oxygen saturation (SpO2)", "%"},
      {"heart_rate", "Heart rate", "beats/min"},
      {"resp_rate", "Respiratory rate", "breaths/min"},
      {"temperature", "Temperature", "degF"},
      // labs
      {"alt", "Alanine aminotransferase", "U/L"},
      {"albumin", "Albumin", "g/dL"},
      {"alk_phos", "Alkaline phosphatase", "U/L"},
      {"anion_gap", "Anion gap", "mmol/L"},
      {"ast", "Aspartate aminotransferase", "U/L"},
      {"bicarbonate", "Bicarbonate", "mmol/L"},
      {"bilirubin", "Bilirubin", "mg/dL"},
      {"bun", "Blood urea nitrogen", "mg/dL"},
      {"calcium", "Calcium", "mg/dL"},
      {"chloride", "Chloride", "mmol/L"},
      {"creatinine", "Creatinine", "mg/dL"},
      {"glucose", "Glucose", "mg/dL"},
      {"hematocrit", "Hematocrit", "%"},
      {"hemoglobin", "Hemoglobin", "g/dL"},
      {"inr", "International normalized ratio", "ratio"},
      {"magnesium", "Magnesium", "mg/dL"},
      {"platelets", "Platelets", "10^3/uL"},
      {"potassium", "Potassium", "mmol/L"},
      {"protein", "Protein", "g/dL"},
      {"prothrombin_time", "Prothrombin time", "s"},
      {"sodium", "Sodium", "mmol/L"},
      {"wbc", "White blood cell count", "10^3/uL"},
  });
  return registry;
}

std::optional<std::size_t> FeatureRegistry::index_of(std::string_view id) const noexcept {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FeatureRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.id);
  return out;
}

}  // namespace jsdscore
