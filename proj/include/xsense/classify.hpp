#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "xsense/core.hpp"
#include "xsense/rng.hpp"

namespace xsense {

/// Anything that maps an input matrix to one class per row.
class Classifier {
public:
  virtual ~Classifier() = default;

  virtual std::vector<ClassIndex> predict(const Matrix& inputs) const = 0;
  virtual std::size_t num_inputs() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

struct ClassifierOptions {
  /// L2 strength on the weight matrix (intercepts are not penalised).
  double c_inv = 1e-3;
  int max_epochs = 5000;
  double grad_tol = 1e-6;
};

/// Multinomial logistic regression.
class LinearClassifier final : public Classifier {
public:
  LinearClassifier() = default;
  LinearClassifier(Matrix weights, Vector bias);

  std::vector<ClassIndex> predict(const Matrix& inputs) const override;
  std::size_t num_inputs() const override { return static_cast<std::size_t>(weights_.cols()); }
  std::size_t num_classes() const override { return static_cast<std::size_t>(weights_.rows()); }
  nlohmann::json to_json() const override;
  static LinearClassifier from_json(const nlohmann::json& j);

  Matrix scores(const Matrix& inputs) const;
  Matrix probabilities(const Matrix& inputs) const;

  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }

  int epochs = 0;
  double grad_norm = 0.0;

private:
  Matrix weights_;  ///< K x p
  Vector bias_;
};

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

/// Weighted multinomial log-loss plus ridge penalty:
///   sum_i w_i * -log p(y_i | x_i) / sum_i w_i + (c_inv / 2) |W|_F^2.
/// params = (W row-major, then the K intercepts).
class SoftmaxObjective {
public:
  SoftmaxObjective(const Matrix& inputs, std::span<const ClassIndex> labels,
                   std::span<const double> sample_weights, std::size_t num_classes, double c_inv);

  double value(const Vector& params) const;
  Vector gradient(const Vector& params) const;
  std::size_t num_params() const { return num_classes_ * (static_cast<std::size_t>(x_.cols()) + 1); }

  Matrix unpack_weights(const Vector& params) const;
  Vector unpack_bias(const Vector& params) const;

private:
  const Matrix& x_;
  std::span<const ClassIndex> labels_;
  std::vector<double> weights_;
  std::size_t num_classes_;
  double c_inv_;
};

/// Zero-initialised full-batch gradient descent; no randomness involved.
LinearClassifier fit_classifier(const Matrix& inputs, std::span<const ClassIndex> labels,
                                std::size_t num_classes, std::span<const double> sample_weights,
                                const ClassifierOptions& opts, RngSeed seed = {});

/// Trains a classifier on weighted rows; the boosting stages are built
/// through this hook so other learners can be swapped in.
using ClassifierTrainer = std::function<std::unique_ptr<Classifier>(
    const Matrix& inputs, std::span<const ClassIndex> labels, std::size_t num_classes,
    std::span<const double> sample_weights)>;

ClassifierTrainer linear_trainer(const ClassifierOptions& opts, RngSeed seed = {});

/// SAMME stage weight ln((1 - err) / err) + ln(K - 1).
double samme_alpha(double err, std::size_t num_classes);

/// Stage weight with the degenerate cases resolved: err == 0 is capped at
/// ln(kMaxOdds) + ln(K - 1); err >= (K - 1) / K abstains with 0.
double stage_alpha(double err, std::size_t num_classes);
inline constexpr double kMaxOdds = 1e12;

/// Per-class sum of stage weights for the stages voting it; ties go to the
/// lower class index.
std::vector<ClassIndex> weighted_vote(std::span<const std::vector<ClassIndex>> stage_predictions,
                                      std::span<const double> alphas, std::size_t num_classes);

struct BoostStage {
  std::shared_ptr<const Classifier> model;
  double error = 0.0;
  double alpha = 0.0;
};

/// Two-stage discrete SAMME: stage 0 sees the mapped representation,
/// stage 1 the raw single-sensor features reweighted by stage 0's errors.
struct BoostedEnsemble {
  std::vector<BoostStage> stages;
  std::size_t num_classes = 0;
  /// Sample weights handed to the second stage (normalised).
  std::vector<double> stage2_weights;

  std::vector<ClassIndex> predict(const Matrix& rep_inputs, const Matrix& raw_inputs) const;

  nlohmann::json to_json() const;
  static BoostedEnsemble from_json(const nlohmann::json& j);
};

BoostedEnsemble fit_boosted(const Matrix& rep_inputs, const Matrix& raw_inputs,
                            std::span<const ClassIndex> labels, std::size_t num_classes,
                            const ClassifierTrainer& trainer);

}  // namespace xsense
