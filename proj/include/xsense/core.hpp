#pragma once

// Canonical data model shared by every stage of the pipeline: raw sensor
// recordings (SensorDataset) and windowed feature matrices (FeatureTable).

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace xsense {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or configuration: the caller can fix it.
class ValidationError : public Error {
public:
  using Error::Error;
};

enum class QualityTier { high, low };

std::string_view to_string(QualityTier tier);
QualityTier parse_quality_tier(std::string_view text);

struct Sample {
  double timestamp = 0.0;
  double value = 0.0;
  bool valid = true;

  bool operator==(const Sample&) const = default;
};

struct SensorChannel {
  std::string sensor_id;
  std::string channel_id;
  double sampling_rate_hz = 1.0;
  std::vector<Sample> samples;

  /// Recording span [first timestamp, last timestamp + one sample period).
  double begin_time() const;
  double end_time() const;

  bool operator==(const SensorChannel&) const = default;
};

struct ChannelKey {
  std::string subject;
  std::string sensor_id;
  std::string channel_id;

  auto operator<=>(const ChannelKey&) const = default;
};

struct LabelInterval {
  double start = 0.0;
  double end = 0.0;
  std::string activity;

  bool operator==(const LabelInterval&) const = default;
};

struct SensorDataset {
  std::string name;
  std::vector<std::string> subjects;
  std::map<ChannelKey, SensorChannel> channels;
  std::map<std::string, std::vector<LabelInterval>> labels;
  std::vector<std::string> class_set;
  std::map<std::string, QualityTier> sensor_tiers;

  std::vector<std::string> sensor_ids() const;
  std::vector<std::string> channel_ids(const std::string& sensor_id) const;
  int class_index(std::string_view activity) const;

  bool operator==(const SensorDataset&) const = default;
};

/// Every invariant violation found in the dataset, one message each.
std::vector<std::string> dataset_diagnostics(const SensorDataset& ds);

/// Throws ValidationError carrying the first diagnostic.
void check_dataset(const SensorDataset& ds);

using ClassIndex = int;
inline constexpr ClassIndex kUnlabeled = -1;

struct ColumnGroup {
  std::string sensor_id;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const ColumnGroup&) const = default;
};

struct TimeWindow {
  double start = 0.0;
  double end = 0.0;

  bool operator==(const TimeWindow&) const = default;
};

/// One row per window. Columns are partitioned into contiguous per-sensor
/// groups; rows of one subject are contiguous.
struct FeatureTable {
  Matrix rows;
  std::vector<std::string> subject_of_row;
  std::vector<ClassIndex> label_of_row;
  std::vector<std::string> class_set;
  std::vector<ColumnGroup> column_groups;
  std::vector<std::string> column_names;
  std::vector<TimeWindow> window_meta;

  std::size_t num_rows() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t num_cols() const { return static_cast<std::size_t>(rows.cols()); }
  std::size_t num_classes() const { return class_set.size(); }

  bool has_group(std::string_view sensor_id) const;
  const ColumnGroup& group(std::string_view sensor_id) const;
  std::vector<std::string> sensor_ids() const;
  /// Distinct subjects in row order.
  std::vector<std::string> subjects() const;
  std::vector<std::size_t> labeled_rows() const;
};

/// Throws ValidationError if the table breaks a structural invariant.
void check_table(const FeatureTable& table);

FeatureTable select_sensor_columns(const FeatureTable& table,
                                   std::span<const std::string> sensor_ids);

struct SubjectSplit {
  FeatureTable train;
  FeatureTable test;
};

SubjectSplit split_by_subject(const FeatureTable& table, std::string_view held_out);

FeatureTable take_rows(const FeatureTable& table, std::span<const std::size_t> indices);

/// Rows that carry a label, in order.
FeatureTable labeled_part(const FeatureTable& table);

}  // namespace xsense
