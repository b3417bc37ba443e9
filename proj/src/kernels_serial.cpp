#include <cmath>
#include <limits>

#include "xsense/kernels.hpp"

namespace xsense::kernels {

double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

namespace serial {

NearestResult nearest_centroid(const Matrix& points, const Matrix& centroids) {
  const auto n = static_cast<std::size_t>(points.rows());
  NearestResult r;
  r.index.resize(n);
  r.sq_dist.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    r.index[i] = arg;
    r.sq_dist[i] = best;
    r.total += best;
  }
  return r;
}

SoftmaxLossGrad softmax_loss_grad(const Matrix& x, std::span<const ClassIndex> y,
                                  std::span<const double> sample_weights, const Matrix& weights,
                                  const Vector& bias, bool with_grad) {
  const Eigen::Index k = weights.rows();
  SoftmaxLossGrad out;
  if (with_grad) {
    out.grad_weights = Matrix::Zero(k, weights.cols());
    out.grad_bias = Vector::Zero(k);
  }
  Vector z(k);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double w = sample_weights[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    z = weights * x.row(i).transpose() + bias;
    const double zmax = z.maxCoeff();
    const double lse = zmax + std::log((z.array() - zmax).exp().sum());
    const auto yi = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
    out.loss += w * (lse - z[yi]);
    if (with_grad) {
      Vector p = (z.array() - lse).exp();
      p[yi] -= 1.0;
      out.grad_weights.noalias() += w * p * x.row(i);
      out.grad_bias += w * p;
    }
  }
  return out;
}

LogisticLossGrad logistic_loss_grad(const Matrix& x, std::span<const double> targets,
                                    const Vector& weights, double bias, bool with_grad) {
  LogisticLossGrad out;
  if (with_grad) out.grad_weights = Vector::Zero(weights.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double z = x.row(i).dot(weights) + bias;
    const double t = targets[static_cast<std::size_t>(i)];
    out.loss += log1p_exp(z) - t * z;
    if (with_grad) {
      const double g = 1.0 / (1.0 + std::exp(-z)) - t;
      out.grad_weights += g * x.row(i).transpose();
      out.grad_bias += g;
    }
  }
  return out;
}

}  // namespace serial
}  // namespace xsense::kernels
