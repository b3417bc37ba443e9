#include "xsense/representation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "xsense/kernels.hpp"

namespace xsense {
using nlohmann::json;

std::string_view to_string(EncodingMode mode) { return mode == EncodingMode::hard ? "hard" : "soft"; }

EncodingMode parse_encoding_mode(std::string_view text) {
  if (text == "hard") return EncodingMode::hard;
  if (text == "soft") return EncodingMode::soft;
  throw ValidationError(fmt::format("unknown encoding mode '{}' (expected hard or soft)", text));
}

std::size_t RepresentationModel::dim() const {
  std::size_t d = 0;
  for (const auto& g : groups) d += g.k();
  return d;
}

json RepresentationModel::to_json() const {
  json groups_j = json::array();
  for (const auto& g : groups) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < g.centroids.rows(); ++r) {
      rows.push_back(std::vector<double>(g.centroids.row(r).begin(), g.centroids.row(r).end()));
    }
    groups_j.push_back({{"sensor_id", g.sensor_id}, {"inertia", g.inertia}, {"centroids", rows}});
  }
  return {{"kind", "representation"},
          {"version", 1},
          {"encoding_mode", std::string(to_string(mode))},
          {"groups", groups_j}};
}

RepresentationModel RepresentationModel::from_json(const json& j) {
  if (j.value("kind", "") != "representation" || j.value("version", 0) != 1) {
    throw ValidationError("not a version 1 representation model");
  }
  RepresentationModel m;
  m.mode = parse_encoding_mode(j.at("encoding_mode").get<std::string>());
  for (const auto& g : j.at("groups")) {
    SensorClusters sc;
    sc.sensor_id = g.at("sensor_id").get<std::string>();
    sc.inertia = g.at("inertia").get<double>();
    const auto rows = g.at("centroids").get<std::vector<std::vector<double>>>();
    const auto cols = rows.empty() ? 0 : rows.front().size();
    sc.centroids.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw ValidationError("ragged centroid matrix");
      for (std::size_t c = 0; c < cols; ++c) {
        sc.centroids(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    m.groups.push_back(std::move(sc));
  }
  return m;
}

RepresentationModel learn_representation(const FeatureTable& table, const RepresentationOptions& opts,
                                         RngSeed seed) {
  if (opts.k_per_sensor < 1) throw ValidationError("k_per_sensor must be positive");
  if (!table.rows.allFinite()) throw ValidationError("representation input contains non-finite values");

  RepresentationModel model;
  model.mode = opts.mode;
  const KMeansOptions km{opts.k_per_sensor, opts.max_iter, opts.tol, opts.restarts};
  for (const auto& g : table.column_groups) {
    const Matrix points = table.rows.middleCols(static_cast<Eigen::Index>(g.begin),
                                                static_cast<Eigen::Index>(g.size()));
    const auto distinct = count_distinct_rows(points);
    if (distinct < static_cast<std::size_t>(opts.k_per_sensor)) {
      throw ValidationError(fmt::format("sensor '{}' has {} distinct rows, fewer than k = {}",
                                        g.sensor_id, distinct, opts.k_per_sensor));
    }
    auto res = kmeans(points, km, seed.derive("kmeans/" + g.sensor_id));
    model.groups.push_back({g.sensor_id, std::move(res.centroids), res.inertia});
  }
  return model;
}

Matrix encode(const RepresentationModel& model, const FeatureTable& table) {
  Matrix out = Matrix::Zero(table.rows.rows(), static_cast<Eigen::Index>(model.dim()));
  Eigen::Index offset = 0;
  for (const auto& g : model.groups) {
    if (!table.has_group(g.sensor_id)) {
      throw ValidationError(fmt::format("encode: table has no group for sensor '{}'", g.sensor_id));
    }
    const auto& tg = table.group(g.sensor_id);
    if (tg.size() != g.input_dim()) {
      throw ValidationError(fmt::format("encode: sensor '{}' has {} columns, model expects {}",
                                        g.sensor_id, tg.size(), g.input_dim()));
    }
    const Matrix points = table.rows.middleCols(static_cast<Eigen::Index>(tg.begin),
                                                static_cast<Eigen::Index>(tg.size()));
    const auto k = static_cast<Eigen::Index>(g.k());
    if (model.mode == EncodingMode::hard) {
      const auto nearest = kernels::nearest_centroid(points, g.centroids);
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        out(i, offset + nearest.index[static_cast<std::size_t>(i)]) = 1.0;
      }
    } else {
      Vector d2(k);
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index c = 0; c < k; ++c) d2[c] = (points.row(i) - g.centroids.row(c)).squaredNorm();
        const double dmin = d2.minCoeff();
        Vector e = (-(d2.array() - dmin)).exp();
        out.block(i, offset, 1, k) = (e / e.sum()).transpose();
      }
    }
    offset += k;
  }
  return out;
}

}  // namespace xsense
