#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jsdscore {

struct FeatureInfo {
  std::string id;
  std::string display_name;
  std::string unit;
};

/// Ordered set of feature identifiers known to the pipeline.
class FeatureRegistry {
 public:
  FeatureRegistry() = default;
  explicit FeatureRegistry(std::vector<FeatureInfo> features);

  /// The 5 bedside vitals and 22 laboratory values monitored by default.
  static const FeatureRegistry& clinical_default();

  std::size_t size() const noexcept { return features_.size(); }
  bool contains(std::string_view id) const noexcept { return index_of(id).has_value(); }
  std::optional<std::size_t> index_of(std::string_view id) const noexcept;
  const FeatureInfo& at(std::size_t i) const { return features_.at(i); }
  const std::vector<FeatureInfo>& features() const noexcept { return features_; }
  std::vector<std::string> ids() const;

 private:
  std::vector<FeatureInfo> features_;
};

}  // namespace jsdscore
