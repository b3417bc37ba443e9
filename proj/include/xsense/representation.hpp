#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "xsense/core.hpp"
#include "xsense/kmeans.hpp"
#include "xsense/rng.hpp"

namespace xsense {

enum class EncodingMode { hard, soft };

std::string_view to_string(EncodingMode mode);
EncodingMode parse_encoding_mode(std::string_view text);

/// k centroids in one sensor's feature subspace.
struct SensorClusters {
  std::string sensor_id;
  Matrix centroids;  ///< k x (sensor column count)
  double inertia = 0.0;

  std::size_t k() const { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

/// Shared representation space: per-sensor cluster memberships,
/// concatenated in group order. Output dimension is the sum of the k's.
struct RepresentationModel {
  std::vector<SensorClusters> groups;
  EncodingMode mode = EncodingMode::hard;

  std::size_t dim() const;

  nlohmann::json to_json() const;
  static RepresentationModel from_json(const nlohmann::json& j);
};

struct RepresentationOptions {
  int k_per_sensor = 3;
  EncodingMode mode = EncodingMode::hard;
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;
};

/// Clusters each sensor group of `table` independently. Labels are ignored.
RepresentationModel learn_representation(const FeatureTable& table,
                                         const RepresentationOptions& opts, RngSeed seed);

/// Rows x dim() encoding. Groups are looked up by sensor id, so `table` may
/// carry extra groups or a different group order. Each group's block is
/// nonnegative and sums to 1: one-hot at the nearest centroid (ties to the
/// lower index) in hard mode, softmax of negative squared distances in soft
/// mode.
Matrix encode(const RepresentationModel& model, const FeatureTable& table);

}  // namespace xsense
