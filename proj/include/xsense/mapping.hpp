#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsense/core.hpp"
#include "xsense/rng.hpp"

namespace xsense {

enum class MappingKind { linear, logistic };

std::string_view to_string(MappingKind kind);
MappingKind parse_mapping_kind(std::string_view text);

struct MappingOptions {
  MappingKind kind = MappingKind::linear;
  /// Ridge strength. Linear: added to the Gram matrix. Logistic: L2 term
  /// lambda/2 |w|^2 on the summed log-loss, i.e. lambda/N per row.
  double lambda = 1e-3;
  int max_epochs = 2000;
  double grad_tol = 1e-6;
  /// Logistic targets are (target >= threshold).
  double threshold = 0.5;

  static MappingOptions linear(double lambda = 1e-3) { return {MappingKind::linear, lambda}; }
  static MappingOptions logistic(double lambda = 1.0) { return {MappingKind::logistic, lambda}; }
};

/// d independent regressors from single-sensor features into the
/// representation space.
struct MappingModel {
  MappingKind kind = MappingKind::linear;
  std::vector<std::string> sensor_ids;
  Matrix weights;  ///< d x m
  Vector intercepts;
  double lambda = 0.0;
  /// Per-dimension gradient-descent epochs (logistic only).
  std::vector<int> epochs;

  std::size_t dim() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(weights.cols()); }

  nlohmann::json to_json() const;
  static MappingModel from_json(const nlohmann::json& j);
};

/// Regularised mean log-loss of one logistic mapping dimension:
///   (1/N) [ sum_i log(1 + e^{z_i}) - t_i z_i + (lambda/2) |w|^2 ],
/// params = (w_1..w_m, b); the intercept is not penalised.
class BinaryLogisticObjective {
public:
  BinaryLogisticObjective(const Matrix& x, std::span<const double> targets, double lambda);

  double value(const Vector& params) const;
  Vector gradient(const Vector& params) const;
  std::size_t num_params() const { return static_cast<std::size_t>(x_.cols()) + 1; }

private:
  const Matrix& x_;
  std::span<const double> targets_;
  double lambda_;
};

/// Row i of `targets` is the representation of the multi-sensor window
/// paired with row i of `single`.
MappingModel fit_mapping(const FeatureTable& single, const Matrix& targets,
                         const MappingOptions& opts, RngSeed seed = {});

Matrix apply_mapping(const MappingModel& model, const Matrix& single);
Matrix apply_mapping(const MappingModel& model, const FeatureTable& single);

}  // namespace xsense
