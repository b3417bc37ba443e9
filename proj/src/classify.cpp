#include "xsense/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "descent.hpp"
#include "xsense/kernels.hpp"

namespace xsense {
using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ValidationError("ragged matrix in model file");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

}  // namespace

LinearClassifier::LinearClassifier(Matrix weights, Vector bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() != bias_.size()) throw Error("classifier: weight/intercept count mismatch");
}

Matrix LinearClassifier::scores(const Matrix& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != num_inputs()) {
    throw ValidationError(fmt::format("classifier expects {} input columns, got {}", num_inputs(),
                                      inputs.cols()));
  }
  Matrix s = inputs * weights_.transpose();
  s.rowwise() += bias_.transpose();
  return s;
}

Matrix LinearClassifier::probabilities(const Matrix& inputs) const {
  Matrix s = scores(inputs);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double mx = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - mx).exp();
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

std::vector<ClassIndex> LinearClassifier::predict(const Matrix& inputs) const {
  const Matrix s = scores(inputs);
  std::vector<ClassIndex> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, arg)) arg = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<ClassIndex>(arg);
  }
  return out;
}

json LinearClassifier::to_json() const {
  return {{"kind", "classifier"},
          {"version", 1},
          {"type", "linear"},
          {"weights", matrix_to_json(weights_)},
          {"bias", std::vector<double>(bias_.begin(), bias_.end())},
          {"epochs", epochs},
          {"grad_norm", grad_norm}};
}

LinearClassifier LinearClassifier::from_json(const json& j) {
  if (j.value("kind", "") != "classifier" || j.value("version", 0) != 1 ||
      j.value("type", "") != "linear") {
    throw ValidationError("not a version 1 linear classifier");
  }
  const auto b = j.at("bias").get<std::vector<double>>();
  LinearClassifier c(matrix_from_json(j.at("weights")),
                     Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
  c.epochs = j.value("epochs", 0);
  c.grad_norm = j.value("grad_norm", 0.0);
  return c;
}

std::unique_ptr<Classifier> classifier_from_json(const json& j) {
  const auto type = j.value("type", "");
  if (type == "linear") return std::make_unique<LinearClassifier>(LinearClassifier::from_json(j));
  throw ValidationError(fmt::format("unknown classifier type '{}'", type));
}

SoftmaxObjective::SoftmaxObjective(const Matrix& inputs, std::span<const ClassIndex> labels,
                                   std::span<const double> sample_weights, std::size_t num_classes,
                                   double c_inv)
    : x_(inputs), labels_(labels), num_classes_(num_classes), c_inv_(c_inv) {
  const double total = std::accumulate(sample_weights.begin(), sample_weights.end(), 0.0);
  weights_.reserve(sample_weights.size());
  for (double w : sample_weights) weights_.push_back(w / total);
}

Matrix SoftmaxObjective::unpack_weights(const Vector& params) const {
  const auto k = static_cast<Eigen::Index>(num_classes_);
  return Eigen::Map<const Matrix>(params.data(), k, x_.cols());
}

Vector SoftmaxObjective::unpack_bias(const Vector& params) const {
  const auto k = static_cast<Eigen::Index>(num_classes_);
  return params.tail(k);
}

double SoftmaxObjective::value(const Vector& params) const {
  const Matrix w = unpack_weights(params);
  const auto r = kernels::softmax_loss_grad(x_, labels_, weights_, w, unpack_bias(params), false);
  return r.loss + 0.5 * c_inv_ * w.squaredNorm();
}

Vector SoftmaxObjective::gradient(const Vector& params) const {
  const Matrix w = unpack_weights(params);
  auto r = kernels::softmax_loss_grad(x_, labels_, weights_, w, unpack_bias(params), true);
  r.grad_weights += c_inv_ * w;
  Vector g(static_cast<Eigen::Index>(num_params()));
  Eigen::Map<Matrix>(g.data(), w.rows(), w.cols()) = r.grad_weights;
  g.tail(w.rows()) = r.grad_bias;
  return g;
}

LinearClassifier fit_classifier(const Matrix& inputs, std::span<const ClassIndex> labels,
                                std::size_t num_classes, std::span<const double> sample_weights,
                                const ClassifierOptions& opts, [[maybe_unused]] RngSeed seed) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (labels.size() != n || sample_weights.size() != n) {
    throw ValidationError("classifier: inputs, labels and weights differ in length");
  }
  if (!inputs.allFinite()) throw ValidationError("classifier: non-finite inputs");
  if (num_classes < 2) throw ValidationError("classifier: need at least two classes");
  std::set<ClassIndex> present;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ValidationError(fmt::format("classifier: label {} outside [0, {})", labels[i], num_classes));
    }
    if (!(sample_weights[i] >= 0.0) || !std::isfinite(sample_weights[i])) {
      throw ValidationError("classifier: sample weights must be finite and nonnegative");
    }
    if (sample_weights[i] > 0.0) present.insert(labels[i]);
    total += sample_weights[i];
  }
  if (!(total > 0.0)) throw ValidationError("classifier: all sample weights are zero");
  if (present.size() < 2) {
    throw ValidationError("classifier: training data contains a single class");
  }

  const SoftmaxObjective obj(inputs, labels, sample_weights, num_classes, opts.c_inv);
  auto fn = [&](const Vector& p, bool with_grad) {
    return std::pair{obj.value(p), with_grad ? obj.gradient(p) : Vector{}};
  };
  const auto res = detail::gradient_descent(fn, Vector::Zero(static_cast<Eigen::Index>(obj.num_params())),
                                            opts.max_epochs, opts.grad_tol);
  LinearClassifier clf(obj.unpack_weights(res.params), obj.unpack_bias(res.params));
  clf.epochs = res.epochs;
  clf.grad_norm = res.grad_norm;
  return clf;
}

ClassifierTrainer linear_trainer(const ClassifierOptions& opts, RngSeed seed) {
  return [opts, seed](const Matrix& x, std::span<const ClassIndex> y, std::size_t k,
                      std::span<const double> w) -> std::unique_ptr<Classifier> {
    return std::make_unique<LinearClassifier>(fit_classifier(x, y, k, w, opts, seed));
  };
}

double samme_alpha(double err, std::size_t num_classes) {
  return std::log((1.0 - err) / err) + std::log(static_cast<double>(num_classes) - 1.0);
}

double stage_alpha(double err, std::size_t num_classes) {
  const double k = static_cast<double>(num_classes);
  if (err >= (k - 1.0) / k) return 0.0;
  if (err <= 0.0) return std::log(kMaxOdds) + std::log(k - 1.0);
  return samme_alpha(err, num_classes);
}

std::vector<ClassIndex> weighted_vote(std::span<const std::vector<ClassIndex>> stage_predictions,
                                      std::span<const double> alphas, std::size_t num_classes) {
  if (stage_predictions.size() != alphas.size() || stage_predictions.empty()) {
    throw Error("weighted_vote: need one alpha per stage");
  }
  const std::size_t n = stage_predictions.front().size();
  std::vector<ClassIndex> out(n);
  std::vector<double> votes(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0.0);
    for (std::size_t s = 0; s < alphas.size(); ++s) {
      votes[static_cast<std::size_t>(stage_predictions[s][i])] += alphas[s];
    }
    out[i] = static_cast<ClassIndex>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

namespace {

double weighted_error(const std::vector<ClassIndex>& pred, std::span<const ClassIndex> labels,
                      const std::vector<double>& w) {
  double err = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != labels[i]) err += w[i];
  }
  return err;
}

}  // namespace

BoostedEnsemble fit_boosted(const Matrix& rep_inputs, const Matrix& raw_inputs,
                            std::span<const ClassIndex> labels, std::size_t num_classes,
                            const ClassifierTrainer& trainer) {
  const auto n = static_cast<std::size_t>(rep_inputs.rows());
  if (static_cast<std::size_t>(raw_inputs.rows()) != n || labels.size() != n) {
    throw ValidationError("boosting: representation inputs, raw inputs and labels are not row-aligned");
  }
  if (n == 0) throw ValidationError("boosting: no training rows");

  BoostedEnsemble ens;
  ens.num_classes = num_classes;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));

  const Matrix* inputs[2] = {&rep_inputs, &raw_inputs};
  for (int stage = 0; stage < 2; ++stage) {
    if (stage == 1) ens.stage2_weights = w;
    std::shared_ptr<const Classifier> model = trainer(*inputs[stage], labels, num_classes, w);
    const auto pred = model->predict(*inputs[stage]);
    const double err = weighted_error(pred, labels, w);
    const double alpha = stage_alpha(err, num_classes);
    ens.stages.push_back({model, err, alpha});

    if (stage == 0 && alpha > 0.0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (pred[i] != labels[i]) w[i] *= std::exp(alpha);
        total += w[i];
      }
      for (double& v : w) v /= total;
    }
  }
  if (ens.stages[0].alpha == 0.0 && ens.stages[1].alpha == 0.0) {
    throw Error(fmt::format("boosting: both stages abstain (errors {} and {})", ens.stages[0].error,
                            ens.stages[1].error));
  }
  return ens;
}

std::vector<ClassIndex> BoostedEnsemble::predict(const Matrix& rep_inputs, const Matrix& raw_inputs) const {
  if (stages.size() != 2) throw Error("boosted ensemble must have two stages");
  const std::vector<std::vector<ClassIndex>> preds = {stages[0].model->predict(rep_inputs),
                                                      stages[1].model->predict(raw_inputs)};
  const std::vector<double> alphas = {stages[0].alpha, stages[1].alpha};
  return weighted_vote(preds, alphas, num_classes);
}

json BoostedEnsemble::to_json() const {
  json st = json::array();
  for (const auto& s : stages) {
    st.push_back({{"error", s.error}, {"alpha", s.alpha}, {"model", s.model->to_json()}});
  }
  return {{"kind", "boosted_ensemble"}, {"version", 1}, {"num_classes", num_classes}, {"stages", st}};
}

BoostedEnsemble BoostedEnsemble::from_json(const json& j) {
  if (j.value("kind", "") != "boosted_ensemble" || j.value("version", 0) != 1) {
    throw ValidationError("not a version 1 boosted ensemble");
  }
  BoostedEnsemble e;
  e.num_classes = j.at("num_classes").get<std::size_t>();
  for (const auto& s : j.at("stages")) {
    e.stages.push_back({std::shared_ptr<const Classifier>(classifier_from_json(s.at("model"))),
                        s.at("error").get<double>(), s.at("alpha").get<double>()});
  }
  if (e.stages.size() != 2) throw ValidationError("boosted ensemble must have two stages");
  return e;
}

}  // namespace xsense
