#include "xsense/kmeans.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "xsense/kernels.hpp"

namespace xsense {

std::size_t count_distinct_rows(const Matrix& points) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    rows.emplace_back(points.row(i).begin(), points.row(i).end());
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

Matrix kmeans_plus_plus(const Matrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[static_cast<std::size_t>(i)] = (points.row(i) - centroids.row(0)).squaredNorm();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double run = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        run += d2[static_cast<std::size_t>(i)];
        if (run > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave `pick` on a zero-weight row; take the last
      // positive-weight row instead.
      if (d2[static_cast<std::size_t>(pick)] == 0.0) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

KMeansResult kmeans_once(const Matrix& points, const KMeansOptions& opts, RngSeed seed) {
  if (opts.k < 1) throw ValidationError("k-means: k must be positive");
  if (points.rows() < opts.k) {
    throw ValidationError(fmt::format("k-means: {} rows cannot form {} clusters", points.rows(), opts.k));
  }
  auto rng = seed.engine();
  KMeansResult res;
  res.centroids = kmeans_plus_plus(points, opts.k, rng);

  const Eigen::Index dim = points.cols();
  for (int it = 0; it < opts.max_iter; ++it) {
    const auto assign = kernels::nearest_centroid(points, res.centroids);
    if (!res.inertia_history.empty() &&
        assign.total > res.inertia_history.back() * (1.0 + 1e-9) + 1e-12) {
      throw Error(fmt::format("k-means: inertia increased from {} to {} at iteration {}",
                              res.inertia_history.back(), assign.total, it));
    }
    res.inertia_history.push_back(assign.total);

    Matrix next = Matrix::Zero(opts.k, dim);
    std::vector<std::size_t> count(static_cast<std::size_t>(opts.k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int c = assign.index[static_cast<std::size_t>(i)];
      next.row(c) += points.row(i);
      ++count[static_cast<std::size_t>(c)];
    }

    // Farthest points first, ties to the lower row index.
    std::vector<Eigen::Index> far;
    std::vector<bool> used(static_cast<std::size_t>(points.rows()), false);
    for (int c = 0; c < opts.k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
        continue;
      }
      if (far.empty()) {
        far.resize(static_cast<std::size_t>(points.rows()));
        std::iota(far.begin(), far.end(), Eigen::Index{0});
        std::stable_sort(far.begin(), far.end(), [&](Eigen::Index a, Eigen::Index b) {
          return assign.sq_dist[static_cast<std::size_t>(a)] > assign.sq_dist[static_cast<std::size_t>(b)];
        });
      }
      for (Eigen::Index idx : far) {
        if (!used[static_cast<std::size_t>(idx)]) {
          used[static_cast<std::size_t>(idx)] = true;
          next.row(c) = points.row(idx);
          break;
        }
      }
    }

    const double shift = (next - res.centroids).rowwise().norm().maxCoeff();
    res.centroids = std::move(next);
    res.iterations = it + 1;
    if (shift < opts.tol) break;
  }

  const auto final_assign = kernels::nearest_centroid(points, res.centroids);
  if (final_assign.total > res.inertia_history.back() * (1.0 + 1e-9) + 1e-12) {
    throw Error("k-means: inertia increased after the final update");
  }
  res.inertia_history.push_back(final_assign.total);
  res.assignment = final_assign.index;
  res.inertia = final_assign.total;
  return res;
}

KMeansResult kmeans(const Matrix& points, const KMeansOptions& opts, RngSeed seed) {
  if (opts.restarts < 1) throw ValidationError("k-means: restarts must be positive");
  KMeansResult best;
  for (int r = 0; r < opts.restarts; ++r) {
    auto res = kmeans_once(points, opts, seed.derive(static_cast<std::uint64_t>(r)));
    res.restart = r;
    if (r == 0 || res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

}  // namespace xsense
