#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsense/core.hpp"
#include "xsense/rng.hpp"

namespace xsense {

struct SensorDeclaration {
  std::string sensor_id;
  std::vector<std::string> channel_ids;
  double sampling_rate_hz = 0.0;
  QualityTier quality_tier = QualityTier::high;
};

/// Describes a dataset stored in the canonical CSV layout:
///
///   samples:  timestamp,subject,sensor_id,channel_id,value   (value may be NaN)
///   labels:   subject,start,end,activity
///
/// Relative file paths are resolved against `base_dir`.
struct DatasetManifest {
  std::string name;
  std::vector<std::filesystem::path> sample_files;
  std::filesystem::path label_file;
  std::vector<SensorDeclaration> sensors;
  std::vector<std::string> class_set;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

DatasetManifest manifest_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Parses every sample and label file. Invalid (NaN) cells become samples
/// flagged invalid; schema violations throw ValidationError naming file,
/// line and column. With `check` false the dataset-level invariants (label
/// ranges, overlaps) are left to dataset_diagnostics().
SensorDataset load_dataset(const DatasetManifest& manifest, bool check = true);

/// Writes samples.csv, labels.csv and manifest.json into `dir` and returns
/// the manifest describing them.
DatasetManifest save_dataset(const SensorDataset& ds, const std::filesystem::path& dir);

/// Fills runs of invalid samples no longer than `max_gap_s` by linear
/// interpolation between the valid neighbours. Longer runs, and runs at
/// the ends of a channel, stay invalid.
SensorDataset impute_missing(const SensorDataset& ds, double max_gap_s);

struct SyntheticActivity {
  std::string label;
  std::vector<int> actions;
};

/// Activities are sequences of latent actions. During action a, sensor s
/// emits obs[s][a] * base_{s,a}(t) plus Gaussian noise, so each sensor only
/// sees some actions well.
struct SyntheticSpec {
  int n_subjects = 4;
  int n_sensors = 2;
  int n_actions = 4;
  std::vector<SyntheticActivity> activities;
  std::vector<std::vector<double>> observability;
  double noise_std = 0.0;
  int samples_per_action = 100;
  int channels_per_sensor = 3;
  double sampling_rate_hz = 50.0;
  /// Occurrences of each activity per subject, shuffled per subject.
  int repetitions = 4;
  /// Occurrences of each activity per subject that carry a label; the rest
  /// are recorded but unlabelled. -1 labels every occurrence.
  int labeled_repetitions = -1;
  /// Relative per-subject gain jitter on each sensor (0 = identical subjects).
  double subject_variability = 0.0;
  RngSeed seed{};

  std::string sensor_id(int s) const;
  std::string subject_id(int i) const;
  void validate() const;
};

SyntheticSpec synthetic_from_json(const nlohmann::json& j);
nlohmann::json synthetic_to_json(const SyntheticSpec& spec);

SensorDataset generate_synthetic(const SyntheticSpec& spec);

/// Latent action active at each labelled instant; exposed for oracles.
struct ActionSpan {
  std::string subject;
  double start = 0.0;
  double end = 0.0;
  int action = 0;
  int activity = 0;
  /// Index of the activity occurrence within the subject's timeline.
  int occurrence = 0;
};
std::vector<ActionSpan> synthetic_action_spans(const SyntheticSpec& spec);

}  // namespace xsense
