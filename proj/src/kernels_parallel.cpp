#include <algorithm>
#include <cmath>
#include <limits>

#include "xsense/kernels.hpp"

namespace xsense::kernels::parallel {
namespace {

std::size_t block_count(Eigen::Index rows) {
  return (static_cast<std::size_t>(rows) + kBlockRows - 1) / kBlockRows;
}

struct BlockRange {
  Eigen::Index begin;
  Eigen::Index end;
};

BlockRange block(std::size_t b, Eigen::Index rows) {
  const auto begin = static_cast<Eigen::Index>(b * kBlockRows);
  return {begin, std::min(rows, begin + static_cast<Eigen::Index>(kBlockRows))};
}

}  // namespace

NearestResult nearest_centroid(const Matrix& points, const Matrix& centroids) {
  const auto n = static_cast<std::size_t>(points.rows());
  const std::size_t nb = block_count(points.rows());
  NearestResult r;
  r.index.resize(n);
  r.sq_dist.resize(n);
  std::vector<double> partial(nb, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto [begin, end] = block(static_cast<std::size_t>(b), points.rows());
    double sum = 0.0;
    for (Eigen::Index i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      r.index[static_cast<std::size_t>(i)] = arg;
      r.sq_dist[static_cast<std::size_t>(i)] = best;
      sum += best;
    }
    partial[static_cast<std::size_t>(b)] = sum;
  }
  for (double p : partial) r.total += p;
  return r;
}

SoftmaxLossGrad softmax_loss_grad(const Matrix& x, std::span<const ClassIndex> y,
                                  std::span<const double> sample_weights, const Matrix& weights,
                                  const Vector& bias, bool with_grad) {
  const Eigen::Index k = weights.rows();
  const std::size_t nb = block_count(x.rows());
  std::vector<SoftmaxLossGrad> partial(nb);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto [begin, end] = block(static_cast<std::size_t>(b), x.rows());
    SoftmaxLossGrad& acc = partial[static_cast<std::size_t>(b)];
    if (with_grad) {
      acc.grad_weights = Matrix::Zero(k, weights.cols());
      acc.grad_bias = Vector::Zero(k);
    }
    Vector z(k);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double w = sample_weights[static_cast<std::size_t>(i)];
      if (w == 0.0) continue;
      z = weights * x.row(i).transpose() + bias;
      const double zmax = z.maxCoeff();
      const double lse = zmax + std::log((z.array() - zmax).exp().sum());
      const auto yi = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
      acc.loss += w * (lse - z[yi]);
      if (with_grad) {
        Vector p = (z.array() - lse).exp();
        p[yi] -= 1.0;
        acc.grad_weights.noalias() += w * p * x.row(i);
        acc.grad_bias += w * p;
      }
    }
  }

  SoftmaxLossGrad out;
  if (with_grad) {
    out.grad_weights = Matrix::Zero(k, weights.cols());
    out.grad_bias = Vector::Zero(k);
  }
  for (const auto& p : partial) {
    out.loss += p.loss;
    if (with_grad) {
      out.grad_weights += p.grad_weights;
      out.grad_bias += p.grad_bias;
    }
  }
  return out;
}

LogisticLossGrad logistic_loss_grad(const Matrix& x, std::span<const double> targets,
                                    const Vector& weights, double bias, bool with_grad) {
  const std::size_t nb = block_count(x.rows());
  std::vector<LogisticLossGrad> partial(nb);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto [begin, end] = block(static_cast<std::size_t>(b), x.rows());
    LogisticLossGrad& acc = partial[static_cast<std::size_t>(b)];
    if (with_grad) acc.grad_weights = Vector::Zero(weights.size());
    for (Eigen::Index i = begin; i < end; ++i) {
      const double z = x.row(i).dot(weights) + bias;
      const double t = targets[static_cast<std::size_t>(i)];
      acc.loss += log1p_exp(z) - t * z;
      if (with_grad) {
        const double g = 1.0 / (1.0 + std::exp(-z)) - t;
        acc.grad_weights += g * x.row(i).transpose();
        acc.grad_bias += g;
      }
    }
  }

  LogisticLossGrad out;
  if (with_grad) out.grad_weights = Vector::Zero(weights.size());
  for (const auto& p : partial) {
    out.loss += p.loss;
    if (with_grad) {
      out.grad_weights += p.grad_weights;
      out.grad_bias += p.grad_bias;
    }
  }
  return out;
}

}  // namespace xsense::kernels::parallel
