#include "xsense/metrics.hpp"

#include <map>

#include <fmt/format.h>

namespace xsense {
using nlohmann::json;

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_(num_classes), counts_(num_classes * num_classes, 0) {}

void ConfusionMatrix::add(ClassIndex truth, ClassIndex predicted) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= k_ ||
      static_cast<std::size_t>(predicted) >= k_) {
    throw Error(fmt::format("confusion matrix: class pair ({}, {}) outside [0, {})", truth, predicted, k_));
  }
  ++counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(predicted)];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw Error("confusion matrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < k_; ++t) s += at(t, predicted);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

double ConfusionMatrix::micro_f1() const {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t c = 0; c < k_; ++c) {
    tp += at(c, c);
    fp += col_sum(c) - at(c, c);
    fn += row_sum(c) - at(c, c);
  }
  if (tp == 0) return 0.0;
  // 2PR / (P + R) with P = tp / (tp + fp), R = tp / (tp + fn), in integers.
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<double> ConfusionMatrix::precision() const {
  std::vector<double> out(k_, 0.0);
  for (std::size_t c = 0; c < k_; ++c) {
    const auto denom = col_sum(c);
    if (denom > 0) out[c] = static_cast<double>(at(c, c)) / static_cast<double>(denom);
  }
  return out;
}

std::vector<double> ConfusionMatrix::recall() const {
  std::vector<double> out(k_, 0.0);
  for (std::size_t c = 0; c < k_; ++c) {
    const auto denom = row_sum(c);
    if (denom > 0) out[c] = static_cast<double>(at(c, c)) / static_cast<double>(denom);
  }
  return out;
}

json ConfusionMatrix::to_json() const {
  json rows = json::array();
  for (std::size_t t = 0; t < k_; ++t) {
    rows.push_back(std::vector<std::size_t>(counts_.begin() + static_cast<std::ptrdiff_t>(t * k_),
                                            counts_.begin() + static_cast<std::ptrdiff_t>((t + 1) * k_)));
  }
  return rows;
}

ConfusionMatrix ConfusionMatrix::from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<std::size_t>>>();
  ConfusionMatrix m(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) throw ValidationError("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) m.counts_[t * m.k_ + p] = rows[t][p];
  }
  return m;
}

double micro_f1(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted) {
  if (truth.size() != predicted.size()) {
    throw ValidationError(fmt::format("micro_f1: {} true labels but {} predictions", truth.size(),
                                      predicted.size()));
  }
  if (truth.empty()) throw ValidationError("micro_f1: empty input");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<ClassIndex, Counts> per_class;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      ++per_class[truth[i]].tp;
    } else {
      ++per_class[predicted[i]].fp;
      ++per_class[truth[i]].fn;
    }
  }
  Counts sum;
  for (const auto& [c, n] : per_class) {
    sum.tp += n.tp;
    sum.fp += n.fp;
    sum.fn += n.fn;
  }
  if (sum.tp == 0) return 0.0;
  return static_cast<double>(2 * sum.tp) / static_cast<double>(2 * sum.tp + sum.fp + sum.fn);
}

double accuracy(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw ValidationError("accuracy: inputs must be nonempty and of equal length");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace xsense
