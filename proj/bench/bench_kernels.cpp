// Serial reference kernels against their OpenMP counterparts.
// Range argument: number of rows.

#include <random>

#include <benchmark/benchmark.h>

#include "xsense/kernels.hpp"

using namespace xsense;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

struct Problem {
  Matrix x;
  Matrix centroids;
  std::vector<ClassIndex> y;
  std::vector<double> w;
  std::vector<double> t;
  Matrix weights;
  Vector bias;

  explicit Problem(Eigen::Index n) : x(random_matrix(n, 60, 1)), centroids(random_matrix(3, 60, 2)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      y.push_back(static_cast<ClassIndex>(i % 8));
      w.push_back(1.0);
      t.push_back(i % 3 == 0 ? 1.0 : 0.0);
    }
    weights = random_matrix(8, 60, 3) * 0.1;
    bias = Vector::Zero(8);
  }
};

template <bool Parallel>
void BM_NearestCentroid(benchmark::State& state) {
  const Problem p(state.range(0));
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::nearest_centroid(p.x, p.centroids)
                      : kernels::serial::nearest_centroid(p.x, p.centroids);
    benchmark::DoNotOptimize(r.total);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SoftmaxLossGrad(benchmark::State& state) {
  const Problem p(state.range(0));
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::softmax_loss_grad(p.x, p.y, p.w, p.weights, p.bias)
                      : kernels::serial::softmax_loss_grad(p.x, p.y, p.w, p.weights, p.bias);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_LogisticLossGrad(benchmark::State& state) {
  const Problem p(state.range(0));
  const Vector w = p.weights.row(0).transpose();
  for (auto _ : state) {
    auto r = Parallel ? kernels::parallel::logistic_loss_grad(p.x, p.t, w, 0.1)
                      : kernels::serial::logistic_loss_grad(p.x, p.t, w, 0.1);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_NearestCentroid<false>)->Name("nearest_centroid/serial")->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_NearestCentroid<true>)->Name("nearest_centroid/parallel")->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_SoftmaxLossGrad<false>)->Name("softmax_loss_grad/serial")->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_SoftmaxLossGrad<true>)->Name("softmax_loss_grad/parallel")->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_LogisticLossGrad<false>)->Name("logistic_loss_grad/serial")->RangeMultiplier(8)->Range(1 << 10, 1 << 16);
BENCHMARK(BM_LogisticLossGrad<true>)->Name("logistic_loss_grad/parallel")->RangeMultiplier(8)->Range(1 << 10, 1 << 16);

BENCHMARK_MAIN();
