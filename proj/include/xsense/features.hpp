#pragma once

#include <span>

#include <json.hpp>

#include "xsense/core.hpp"

namespace xsense {

enum class LabelRule { majority, strict };

std::string_view to_string(LabelRule rule);
LabelRule parse_label_rule(std::string_view text);

struct WindowSpec {
  double length_s = 1.0;
  double step_s = 1.0;
  /// Every channel must have at least this fraction of valid samples.
  double min_valid_fraction = 1.0;
  LabelRule label_rule = LabelRule::majority;

  void validate() const;

  static WindowSpec cooking() { return {1.0, 0.25}; }
  static WindowSpec opp_high_level() { return {30.0, 15.0}; }
  static WindowSpec opp_locomotion() { return {3.0, 2.0}; }
  static WindowSpec pamap() { return {5.12, 1.0}; }
};

WindowSpec window_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WindowSpec& spec);

/// Per-channel window statistics, in column order.
struct WindowStats {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
  double range = 0.0;
  double mean_minus_median = 0.0;
};

inline constexpr std::size_t kFeaturesPerChannel = 4;

WindowStats window_stats(std::span<const double> values);

/// Sliding windows anchored at each subject's first timestamp. Produces
/// kFeaturesPerChannel columns per channel, grouped by sensor.
FeatureTable window_features(const SensorDataset& ds, const WindowSpec& spec);

class Standardizer {
public:
  Standardizer() = default;
  Standardizer(Vector mean, Vector std);

  static constexpr double kStdFloor = 1e-12;

  static Standardizer fit(const Matrix& rows);

  Matrix apply(const Matrix& rows) const;

  const Vector& mean() const { return mean_; }
  const Vector& std() const { return std_; }
  std::size_t num_cols() const { return static_cast<std::size_t>(mean_.size()); }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

private:
  Vector mean_;
  Vector std_;
};

Standardizer fit_standardizer(const FeatureTable& table);
FeatureTable apply_standardizer(const Standardizer& st, const FeatureTable& table);

}  // namespace xsense
