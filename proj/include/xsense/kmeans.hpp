#pragma once

#include <random>
#include <vector>

#include "xsense/core.hpp"
#include "xsense/rng.hpp"

namespace xsense {

struct KMeansOptions {
  int k = 3;
  int max_iter = 300;
  /// Stop once no centroid moves farther than this.
  double tol = 1e-6;
  int restarts = 10;
};

struct KMeansResult {
  Matrix centroids;
  std::vector<int> assignment;
  double inertia = 0.0;
  int iterations = 0;
  int restart = 0;
  /// Inertia after each assignment step, final assignment included.
  std::vector<double> inertia_history;
};

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance from the nearest chosen centre.
Matrix kmeans_plus_plus(const Matrix& points, int k, std::mt19937_64& rng);

/// One k-means++ / Lloyd run. Empty clusters are reseeded to the point
/// farthest from its assigned centroid.
KMeansResult kmeans_once(const Matrix& points, const KMeansOptions& opts, RngSeed seed);

/// Best of `opts.restarts` runs by inertia; ties go to the earlier restart.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& opts, RngSeed seed);

std::size_t count_distinct_rows(const Matrix& points);

}  // namespace xsense
