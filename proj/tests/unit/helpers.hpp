#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "xsense/core.hpp"
#include "xsense/ingest.hpp"

namespace xsense::test {

struct GroupSpec {
  std::string sensor_id;
  std::size_t cols;
};

/// Table with the given column groups; rows default to zeros and every row
/// is labelled 0 and belongs to subject "s1".
inline FeatureTable make_table(const std::vector<GroupSpec>& groups, std::size_t n_rows,
                               std::vector<std::string> class_set = {"a", "b"}) {
  FeatureTable t;
  std::size_t col = 0;
  for (const auto& g : groups) {
    t.column_groups.push_back({g.sensor_id, col, col + g.cols});
    for (std::size_t c = 0; c < g.cols; ++c) t.column_names.push_back(fmt::format("{}/c{}/mean", g.sensor_id, c));
    col += g.cols;
  }
  t.rows = Matrix::Zero(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(col));
  t.subject_of_row.assign(n_rows, "s1");
  t.label_of_row.assign(n_rows, 0);
  t.class_set = std::move(class_set);
  t.window_meta.resize(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) t.window_meta[i] = {static_cast<double>(i), static_cast<double>(i) + 1.0};
  return t;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

/// One subject, one sensor "imu" with channels x, y, z sampled at 1 Hz.
inline SensorDataset tiny_dataset(std::size_t n_samples = 100) {
  SensorDataset ds;
  ds.name = "tiny";
  ds.subjects = {"s1"};
  ds.class_set = {"walk", "sit"};
  ds.sensor_tiers["imu"] = QualityTier::high;
  for (const char* ch : {"x", "y", "z"}) {
    SensorChannel c{"imu", ch, 1.0, {}};
    for (std::size_t i = 0; i < n_samples; ++i) {
      c.samples.push_back({static_cast<double>(i), 0.5 * static_cast<double>(i) + (ch[0] - 'x'), true});
    }
    ds.channels[{"s1", "imu", ch}] = c;
  }
  const double half = static_cast<double>(n_samples) / 2.0;
  ds.labels["s1"] = {{0.0, half, "walk"}, {half, static_cast<double>(n_samples), "sit"}};
  return ds;
}

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("xsense_test_{}_{}", ::getpid(), counter++);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

/// Central finite difference of f at coordinate i.
template <class F>
double finite_difference(F&& f, Vector x, Eigen::Index i, double h = 1e-6) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace xsense::test
