#pragma once

// Full-batch gradient descent with a step-halving (Armijo) line search.
// The trial step of each epoch is the Barzilai-Borwein estimate from the
// previous move; halving guarantees monotone decrease.

#include <cmath>
#include <utility>

#include "xsense/core.hpp"

namespace xsense::detail {

struct DescentResult {
  Vector params;
  double value = 0.0;
  double grad_norm = 0.0;
  int epochs = 0;
  bool converged = false;
};

/// `objective(params, with_grad)` returns {value, gradient}; the gradient
/// may be empty when `with_grad` is false.
template <class Objective>
DescentResult gradient_descent(Objective&& objective, Vector params, int max_epochs, double grad_tol) {
  auto [value, grad] = objective(params, true);
  double step = 1.0 / std::max(1.0, grad.norm());
  DescentResult res;
  int epoch = 0;
  for (; epoch < max_epochs; ++epoch) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) < grad_tol) {
      res.converged = true;
      break;
    }
    double t = step;
    Vector next;
    double next_value = 0.0;
    bool accepted = false;
    while (t > 1e-20) {
      next = params - t * grad;
      next_value = objective(next, false).first;
      if (next_value <= value - 1e-4 * t * gnorm2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable
    auto [nv, ng] = objective(next, true);
    const Vector s = next - params;
    const Vector y = ng - grad;
    const double sy = s.dot(y);
    step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t;
    params = std::move(next);
    value = nv;
    grad = std::move(ng);
  }
  res.params = std::move(params);
  res.value = value;
  res.grad_norm = grad.norm();
  res.epochs = epoch;
  if (!res.converged && res.grad_norm < grad_tol) res.converged = true;
  return res;
}

}  // namespace xsense::detail
