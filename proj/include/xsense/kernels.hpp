#pragma once

// Data-parallel inner loops of the trainers. Each kernel has a plain serial
// reference and an OpenMP version. The OpenMP versions reduce over fixed
// row blocks and fold the block partials in block order, so their results
// do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "xsense/core.hpp"

namespace xsense::kernels {

inline constexpr std::size_t kBlockRows = 256;

struct NearestResult {
  std::vector<int> index;       ///< nearest centroid, ties to the lower index
  std::vector<double> sq_dist;  ///< squared distance to it
  double total = 0.0;           ///< sum of sq_dist (k-means inertia)
};

/// Weighted multinomial log-loss sum_i w_i * -log p(y_i | x_i) and its
/// gradient with respect to the K x p weight matrix and K intercepts.
struct SoftmaxLossGrad {
  double loss = 0.0;
  Matrix grad_weights;
  Vector grad_bias;
};

/// Binary log-loss sum_i log(1 + e^z_i) - t_i z_i, z = x.w + b.
struct LogisticLossGrad {
  double loss = 0.0;
  Vector grad_weights;
  double grad_bias = 0.0;
};

namespace serial {

NearestResult nearest_centroid(const Matrix& points, const Matrix& centroids);

SoftmaxLossGrad softmax_loss_grad(const Matrix& x, std::span<const ClassIndex> y,
                                  std::span<const double> sample_weights, const Matrix& weights,
                                  const Vector& bias, bool with_grad = true);

LogisticLossGrad logistic_loss_grad(const Matrix& x, std::span<const double> targets,
                                    const Vector& weights, double bias, bool with_grad = true);

}  // namespace serial

namespace parallel {

NearestResult nearest_centroid(const Matrix& points, const Matrix& centroids);

SoftmaxLossGrad softmax_loss_grad(const Matrix& x, std::span<const ClassIndex> y,
                                  std::span<const double> sample_weights, const Matrix& weights,
                                  const Vector& bias, bool with_grad = true);

LogisticLossGrad logistic_loss_grad(const Matrix& x, std::span<const double> targets,
                                    const Vector& weights, double bias, bool with_grad = true);

}  // namespace parallel

// The trainers use the parallel kernels.
using parallel::logistic_loss_grad;
using parallel::nearest_centroid;
using parallel::softmax_loss_grad;

/// Numerically stable log(1 + e^z).
double log1p_exp(double z);

}  // namespace xsense::kernels
