#include <doctest.h>

#include <omp.h>

#include "helpers.hpp"
#include "xsense/kernels.hpp"

using namespace xsense;
namespace k = xsense::kernels;

namespace {

struct Problem {
  Matrix x;
  std::vector<ClassIndex> y;
  std::vector<double> w;
  std::vector<double> t;
  Matrix weights;
  Vector bias;
};

Problem make_problem(Eigen::Index n, Eigen::Index p, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Problem pr;
  pr.x = test::random_matrix(n, p, rng);
  std::uniform_int_distribution<int> cls(0, classes - 1);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pr.y.push_back(cls(rng));
    pr.w.push_back(u(rng));
    pr.t.push_back(u(rng) > 1.0 ? 1.0 : 0.0);
  }
  pr.weights = test::random_matrix(classes, p, rng);
  pr.bias = test::random_matrix(classes, 1, rng).col(0);
  return pr;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels agree with the serial reference") {
    for (Eigen::Index n : {1, 255, 256, 257, 1000}) {
      const auto pr = make_problem(n, 5, 4, static_cast<std::uint64_t>(n));
      const Matrix centroids = pr.weights;

      const auto ns = k::serial::nearest_centroid(pr.x, centroids);
      const auto np = k::parallel::nearest_centroid(pr.x, centroids);
      CHECK(ns.index == np.index);
      CHECK(ns.sq_dist == np.sq_dist);
      CHECK(test::relative_error(ns.total, np.total) < 1e-12);

      const auto ss = k::serial::softmax_loss_grad(pr.x, pr.y, pr.w, pr.weights, pr.bias);
      const auto sp = k::parallel::softmax_loss_grad(pr.x, pr.y, pr.w, pr.weights, pr.bias);
      CHECK(test::relative_error(ss.loss, sp.loss) < 1e-12);
      CHECK((ss.grad_weights - sp.grad_weights).norm() <= 1e-12 * (1.0 + ss.grad_weights.norm()));
      CHECK((ss.grad_bias - sp.grad_bias).norm() <= 1e-12 * (1.0 + ss.grad_bias.norm()));

      const Vector wv = pr.weights.row(0).transpose();
      const auto ls = k::serial::logistic_loss_grad(pr.x, pr.t, wv, 0.3);
      const auto lp = k::parallel::logistic_loss_grad(pr.x, pr.t, wv, 0.3);
      CHECK(test::relative_error(ls.loss, lp.loss) < 1e-12);
      CHECK((ls.grad_weights - lp.grad_weights).norm() <= 1e-12 * (1.0 + ls.grad_weights.norm()));
      CHECK(test::relative_error(ls.grad_bias, lp.grad_bias) < 1e-10);
    }
  }

  TEST_CASE("parallel results do not depend on the thread count") {
    const auto pr = make_problem(3000, 6, 3, 99);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = k::parallel::softmax_loss_grad(pr.x, pr.y, pr.w, pr.weights, pr.bias);
    const auto la = k::parallel::logistic_loss_grad(pr.x, pr.t, pr.weights.row(1).transpose(), -0.2);
    const auto na = k::parallel::nearest_centroid(pr.x, pr.weights);
    omp_set_num_threads(4);
    const auto b = k::parallel::softmax_loss_grad(pr.x, pr.y, pr.w, pr.weights, pr.bias);
    const auto lb = k::parallel::logistic_loss_grad(pr.x, pr.t, pr.weights.row(1).transpose(), -0.2);
    const auto nb = k::parallel::nearest_centroid(pr.x, pr.weights);
    omp_set_num_threads(saved);
    CHECK(a.loss == b.loss);
    CHECK(a.grad_weights == b.grad_weights);
    CHECK(a.grad_bias == b.grad_bias);
    CHECK(la.loss == lb.loss);
    CHECK(la.grad_weights == lb.grad_weights);
    CHECK(na.total == nb.total);
  }

  TEST_CASE("nearest centroid ties go to the lower index") {
    Matrix c(2, 1);
    c << -1, 1;
    Matrix x(1, 1);
    x << 0;
    CHECK(k::serial::nearest_centroid(x, c).index[0] == 0);
    CHECK(k::parallel::nearest_centroid(x, c).index[0] == 0);
  }

  TEST_CASE("softmax gradient matches finite differences") {
    const auto pr = make_problem(40, 3, 3, 5);
    const auto g = k::serial::softmax_loss_grad(pr.x, pr.y, pr.w, pr.weights, pr.bias);
    const double h = 1e-6;
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 3; ++c) {
        Matrix up = pr.weights;
        Matrix dn = pr.weights;
        up(r, c) += h;
        dn(r, c) -= h;
        const double fd = (k::serial::softmax_loss_grad(pr.x, pr.y, pr.w, up, pr.bias, false).loss -
                           k::serial::softmax_loss_grad(pr.x, pr.y, pr.w, dn, pr.bias, false).loss) /
                          (2 * h);
        CHECK(test::relative_error(fd, g.grad_weights(r, c)) < 1e-5);
      }
    }
  }

  TEST_CASE("log1p_exp is stable") {
    CHECK(k::log1p_exp(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(k::log1p_exp(800.0) == doctest::Approx(800.0));
    CHECK(k::log1p_exp(-800.0) >= 0.0);
    CHECK(k::log1p_exp(-800.0) < 1e-300);
    CHECK(std::isfinite(k::log1p_exp(1e6)));
  }
}
