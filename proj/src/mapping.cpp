#include "xsense/mapping.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "descent.hpp"
#include "xsense/kernels.hpp"

namespace xsense {
using nlohmann::json;

std::string_view to_string(MappingKind kind) {
  return kind == MappingKind::linear ? "linear" : "logistic";
}

MappingKind parse_mapping_kind(std::string_view text) {
  if (text == "linear") return MappingKind::linear;
  if (text == "logistic") return MappingKind::logistic;
  throw ValidationError(fmt::format("unknown mapping kind '{}'", text));
}

BinaryLogisticObjective::BinaryLogisticObjective(const Matrix& x, std::span<const double> targets,
                                                 double lambda)
    : x_(x), targets_(targets), lambda_(lambda) {}

double BinaryLogisticObjective::value(const Vector& params) const {
  const Eigen::Index m = x_.cols();
  const Vector w = params.head(m);
  const auto r = kernels::logistic_loss_grad(x_, targets_, w, params[m], false);
  return (r.loss + 0.5 * lambda_ * w.squaredNorm()) / static_cast<double>(x_.rows());
}

Vector BinaryLogisticObjective::gradient(const Vector& params) const {
  const Eigen::Index m = x_.cols();
  const Vector w = params.head(m);
  const auto r = kernels::logistic_loss_grad(x_, targets_, w, params[m], true);
  Vector g(m + 1);
  g.head(m) = (r.grad_weights + lambda_ * w) / static_cast<double>(x_.rows());
  g[m] = r.grad_bias / static_cast<double>(x_.rows());
  return g;
}

namespace {

MappingModel fit_linear(const Matrix& x, const Matrix& targets, double lambda) {
  const Vector x_mean = x.colwise().mean().transpose();
  const Vector t_mean = targets.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Matrix tc = targets.rowwise() - t_mean.transpose();

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(fmt::format(
        "linear mapping: normal equations are singular (lambda = {}); use a positive ridge strength",
        lambda));
  }
  const Eigen::MatrixXd coef = llt.solve(Eigen::MatrixXd(xc.transpose() * tc));  // m x d

  MappingModel model;
  model.kind = MappingKind::linear;
  model.lambda = lambda;
  model.weights = coef.transpose();
  model.intercepts = t_mean - model.weights * x_mean;
  return model;
}

MappingModel fit_logistic(const Matrix& x, const Matrix& targets, const MappingOptions& opts) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  const Eigen::Index d = targets.cols();
  MappingModel model;
  model.kind = MappingKind::logistic;
  model.lambda = opts.lambda;
  model.weights = Matrix::Zero(d, m);
  model.intercepts = Vector::Zero(d);
  model.epochs.assign(static_cast<std::size_t>(d), 0);

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> t(static_cast<std::size_t>(n));
    double positives = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      t[static_cast<std::size_t>(i)] = targets(i, j) >= opts.threshold ? 1.0 : 0.0;
      positives += t[static_cast<std::size_t>(i)];
    }
    if (positives == 0.0 || positives == static_cast<double>(n)) {
      // Constant column: predict its empirical rate, kept strictly inside (0, 1).
      const double rate = std::clamp(positives / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
      model.intercepts[j] = std::log(rate / (1.0 - rate));
      continue;
    }
    const BinaryLogisticObjective obj(x, t, opts.lambda);
    auto fn = [&](const Vector& p, bool with_grad) {
      return std::pair{obj.value(p), with_grad ? obj.gradient(p) : Vector{}};
    };
    const auto res = detail::gradient_descent(fn, Vector::Zero(m + 1), opts.max_epochs, opts.grad_tol);
    model.weights.row(j) = res.params.head(m).transpose();
    model.intercepts[j] = res.params[m];
    model.epochs[static_cast<std::size_t>(j)] = res.epochs;
  }
  return model;
}

}  // namespace

MappingModel fit_mapping(const FeatureTable& single, const Matrix& targets, const MappingOptions& opts,
                         [[maybe_unused]] RngSeed seed) {
  if (single.rows.rows() != targets.rows()) {
    throw ValidationError(fmt::format("mapping: {} input rows but {} target rows", single.rows.rows(),
                                      targets.rows()));
  }
  if (single.rows.rows() == 0) throw ValidationError("mapping: no training rows");
  if (!(opts.lambda >= 0.0)) throw ValidationError("mapping: lambda must be nonnegative");
  if (!single.rows.allFinite() || !targets.allFinite()) {
    throw ValidationError("mapping: non-finite input");
  }
  MappingModel model = opts.kind == MappingKind::linear ? fit_linear(single.rows, targets, opts.lambda)
                                                        : fit_logistic(single.rows, targets, opts);
  model.sensor_ids = single.sensor_ids();
  return model;
}

Matrix apply_mapping(const MappingModel& model, const Matrix& single) {
  if (static_cast<std::size_t>(single.cols()) != model.input_dim()) {
    throw ValidationError(fmt::format("mapping expects {} input columns, got {}", model.input_dim(),
                                      single.cols()));
  }
  Matrix out = single * model.weights.transpose();
  out.rowwise() += model.intercepts.transpose();
  if (model.kind == MappingKind::logistic) {
    out = out.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  }
  return out;
}

Matrix apply_mapping(const MappingModel& model, const FeatureTable& single) {
  return apply_mapping(model, single.rows);
}

json MappingModel::to_json() const {
  json rows = json::array();
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    rows.push_back(std::vector<double>(weights.row(r).begin(), weights.row(r).end()));
  }
  return {{"kind", "mapping"},
          {"version", 1},
          {"mapping_kind", std::string(to_string(kind))},
          {"sensor_ids", sensor_ids},
          {"lambda", lambda},
          {"input_dim", input_dim()},
          {"weights", rows},
          {"intercepts", std::vector<double>(intercepts.begin(), intercepts.end())},
          {"epochs", epochs}};
}

MappingModel MappingModel::from_json(const json& j) {
  if (j.value("kind", "") != "mapping" || j.value("version", 0) != 1) {
    throw ValidationError("not a version 1 mapping model");
  }
  MappingModel m;
  m.kind = parse_mapping_kind(j.at("mapping_kind").get<std::string>());
  m.sensor_ids = j.at("sensor_ids").get<std::vector<std::string>>();
  m.lambda = j.at("lambda").get<double>();
  const auto in_dim = j.at("input_dim").get<std::size_t>();
  const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto b = j.at("intercepts").get<std::vector<double>>();
  if (rows.size() != b.size()) throw ValidationError("mapping: weight/intercept count mismatch");
  m.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(in_dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != in_dim) throw ValidationError("mapping: ragged weight matrix");
    for (std::size_t c = 0; c < in_dim; ++c) {
      m.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  m.intercepts = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  m.epochs = j.value("epochs", std::vector<int>{});
  return m;
}

}  // namespace xsense
