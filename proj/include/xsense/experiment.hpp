#pragma once

// Leave-one-subject-out harness for the single-sensor-from-multi-sensor
// pipeline and its baselines.

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsense/classify.hpp"
#include "xsense/core.hpp"
#include "xsense/features.hpp"
#include "xsense/ingest.hpp"
#include "xsense/mapping.hpp"
#include "xsense/metrics.hpp"
#include "xsense/representation.hpp"

namespace xsense {

/// Trad:     classifier on the test sensor's own features.
/// Clusters: classifier on the multi-sensor cluster encoding (train and test).
/// LinR/LogR: classifier on the test sensor mapped into the cluster space.
/// LinB/LogB: LinR/LogR boosted with the Trad learner.
enum class Variant { Trad, Clusters, LinR, LogR, LinB, LogB };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::Trad, Variant::Clusters, Variant::LinR,
                                                        Variant::LogR, Variant::LinB,     Variant::LogB};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
bool uses_mapping(Variant v);
bool is_boosted(Variant v);
MappingKind mapping_kind(Variant v);

/// Which training rows feed representation learning.
enum class RepresentationRows { all, unlabeled_only };

struct DatasetSource {
  std::filesystem::path manifest;
  std::optional<SyntheticSpec> synthetic;
  double max_gap_s = 1.0;
};

struct ExperimentConfig {
  DatasetSource dataset;
  WindowSpec window;
  std::string test_sensor;
  /// Sensors the representation is learned from. Empty selects every
  /// high-quality sensor.
  std::vector<std::string> training_sensors;
  Variant variant = Variant::Trad;
  int k_per_sensor = 3;
  EncodingMode encoding = EncodingMode::hard;
  int kmeans_restarts = 10;
  double linear_lambda = 1e-3;
  double logistic_lambda = 1.0;
  ClassifierOptions classifier;
  RepresentationRows representation_rows = RepresentationRows::all;
  RngSeed seed{42};
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Relative manifest paths are resolved against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {});

struct GridConfig {
  ExperimentConfig base;
  std::vector<std::string> test_sensors;
  std::vector<Variant> variants;

  /// Sensor-major, variants in the listed order.
  std::vector<ExperimentConfig> cells() const;
};

/// Accepts either list keys (test_sensors, variants) or the single-cell
/// keys (test_sensor, variant).
GridConfig grid_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const GridConfig& g);
GridConfig load_grid_config(const std::filesystem::path& path);

/// Windowed features of the configured dataset (loaded or generated,
/// then imputed).
struct PreparedData {
  std::string dataset_name;
  FeatureTable table;
  std::map<std::string, QualityTier> sensor_tiers;
};

PreparedData prepare_data(const DatasetSource& source, const WindowSpec& window);

/// Thrown when a held-out subject's rows reach a fitting stage.
class LeakError : public Error {
public:
  using Error::Error;
};

struct FitEvent {
  std::string stage;
  std::vector<std::string> subjects;
};

/// Records the subjects seen by each fitting stage of one fold and throws
/// LeakError as soon as the held-out subject shows up.
class LeakAudit {
public:
  explicit LeakAudit(std::string held_out) : held_out_(std::move(held_out)) {}

  void record(std::string_view stage, std::span<const std::string> subject_of_row);

  const std::string& held_out() const { return held_out_; }
  const std::vector<FitEvent>& events() const { return events_; }
  std::size_t checks() const { return events_.size(); }

private:
  std::string held_out_;
  std::vector<FitEvent> events_;
};

using MappingOverride = std::function<Matrix(const RepresentationModel&, const FeatureTable& single)>;

struct RunHooks {
  /// Called once per fold after it finishes, with the fold's audit.
  std::function<void(const LeakAudit&)> on_fold;
  /// Replaces g(x*) in the mapping variants (train and test side alike).
  MappingOverride mapping_override;
};

/// A trained pipeline for one variant.
struct Pipeline {
  Variant variant = Variant::Trad;
  std::string test_sensor;
  std::vector<std::string> training_sensors;
  std::vector<std::string> class_set;
  std::optional<Standardizer> multi_standardizer;
  std::optional<Standardizer> single_standardizer;
  std::optional<RepresentationModel> representation;
  std::optional<MappingModel> mapping;
  std::shared_ptr<const Classifier> classifier;
  std::optional<BoostedEnsemble> ensemble;
  MappingOverride mapping_override;

  std::vector<ClassIndex> predict(const FeatureTable& table) const;

  nlohmann::json to_json() const;
  static Pipeline from_json(const nlohmann::json& j);
};

/// `config.training_sensors` must already be resolved (see resolve_config).
Pipeline fit_pipeline(const ExperimentConfig& config, const FeatureTable& train, LeakAudit* audit = nullptr,
                      const RunHooks& hooks = {});

/// Fills default training sensors and checks the config against the data.
ExperimentConfig resolve_config(const ExperimentConfig& config, const PreparedData& data);

struct FoldReport {
  std::string held_out;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double micro_f1 = 0.0;
  ConfusionMatrix confusion;
};

struct RunReport {
  ExperimentConfig config;
  std::string dataset_name;
  std::vector<std::string> class_set;
  std::vector<FoldReport> folds;
  ConfusionMatrix pooled;
  double pooled_micro_f1 = 0.0;
  double mean_fold_micro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t leak_checks = 0;
  /// Not serialised, so identical runs produce identical report bytes.
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
};

RunReport run_experiment(const ExperimentConfig& config);
RunReport run_experiment(const ExperimentConfig& config, const PreparedData& data, const RunHooks& hooks = {});

/// Trains the configured pipeline on every subject.
Pipeline fit_final_pipeline(const ExperimentConfig& config, const PreparedData& data);

}  // namespace xsense
