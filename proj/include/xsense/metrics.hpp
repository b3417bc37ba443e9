#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "xsense/core.hpp"

namespace xsense {

/// counts(t, p): rows whose true class is t and predicted class is p.
class ConfusionMatrix {
public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(ClassIndex truth, ClassIndex predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::size_t num_classes() const { return k_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  std::size_t row_sum(std::size_t truth) const;
  std::size_t col_sum(std::size_t predicted) const;
  std::size_t total() const;

  /// Pooled TP / FP / FN over all classes.
  double micro_f1() const;
  /// Per-class precision and recall; 0 where the denominator is 0.
  std::vector<double> precision() const;
  std::vector<double> recall() const;

  nlohmann::json to_json() const;
  static ConfusionMatrix from_json(const nlohmann::json& j);

  bool operator==(const ConfusionMatrix&) const = default;

private:
  std::size_t k_ = 0;
  std::vector<std::size_t> counts_;
};

/// Micro-averaged F1 over every class that occurs in either sequence. For
/// single-label multiclass prediction this equals accuracy.
double micro_f1(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted);

double accuracy(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted);

}  // namespace xsense
