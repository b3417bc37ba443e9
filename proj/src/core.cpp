#include "xsense/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace xsense {

std::string_view to_string(QualityTier tier) {
  return tier == QualityTier::high ? "high" : "low";
}

QualityTier parse_quality_tier(std::string_view text) {
  if (text == "high") return QualityTier::high;
  if (text == "low") return QualityTier::low;
  throw ValidationError(fmt::format("unknown quality tier '{}' (expected high or low)", text));
}

double SensorChannel::begin_time() const {
  return samples.empty() ? 0.0 : samples.front().timestamp;
}

double SensorChannel::end_time() const {
  return samples.empty() ? 0.0 : samples.back().timestamp + 1.0 / sampling_rate_hz;
}

std::vector<std::string> SensorDataset::sensor_ids() const {
  std::set<std::string> ids;
  for (const auto& [key, ch] : channels) ids.insert(key.sensor_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> SensorDataset::channel_ids(const std::string& sensor_id) const {
  std::set<std::string> ids;
  for (const auto& [key, ch] : channels) {
    if (key.sensor_id == sensor_id) ids.insert(key.channel_id);
  }
  return {ids.begin(), ids.end()};
}

int SensorDataset::class_index(std::string_view activity) const {
  auto it = std::find(class_set.begin(), class_set.end(), activity);
  return it == class_set.end() ? -1 : static_cast<int>(it - class_set.begin());
}

std::vector<std::string> dataset_diagnostics(const SensorDataset& ds) {
  std::vector<std::string> out;
  const std::set<std::string> subjects(ds.subjects.begin(), ds.subjects.end());

  for (const auto& [key, ch] : ds.channels) {
    if (!subjects.contains(key.subject)) {
      out.push_back(fmt::format("channel {}/{} references undeclared subject '{}'",
                                key.sensor_id, key.channel_id, key.subject));
    }
    if (!(ch.sampling_rate_hz > 0.0) || !std::isfinite(ch.sampling_rate_hz)) {
      out.push_back(fmt::format("subject {} channel {}/{}: sampling rate must be positive",
                                key.subject, key.sensor_id, key.channel_id));
    }
    for (std::size_t i = 1; i < ch.samples.size(); ++i) {
      if (!(ch.samples[i].timestamp > ch.samples[i - 1].timestamp)) {
        out.push_back(fmt::format(
            "subject {} channel {}/{}: timestamps not strictly increasing at sample {} (t={})",
            key.subject, key.sensor_id, key.channel_id, i, ch.samples[i].timestamp));
        break;
      }
    }
  }

  for (const auto& [subject, intervals] : ds.labels) {
    if (!subjects.contains(subject)) {
      out.push_back(fmt::format("labels reference undeclared subject '{}'", subject));
      continue;
    }
    double rec_begin = INFINITY;
    double rec_end = -INFINITY;
    for (const auto& [key, ch] : ds.channels) {
      if (key.subject != subject || ch.samples.empty()) continue;
      rec_begin = std::min(rec_begin, ch.begin_time());
      rec_end = std::max(rec_end, ch.end_time());
    }
    std::vector<LabelInterval> sorted = intervals;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    constexpr double eps = 1e-9;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const auto& iv = sorted[i];
      if (!(iv.end > iv.start)) {
        out.push_back(fmt::format("subject {}: label interval [{}, {}) '{}' is empty",
                                  subject, iv.start, iv.end, iv.activity));
      }
      if (iv.start < rec_begin - eps || iv.end > rec_end + eps) {
        out.push_back(fmt::format(
            "subject {}: label interval [{}, {}) '{}' lies outside the recording [{}, {})",
            subject, iv.start, iv.end, iv.activity, rec_begin, rec_end));
      }
      if (i > 0 && iv.start < sorted[i - 1].end - eps) {
        out.push_back(fmt::format("subject {}: label intervals [{}, {}) and [{}, {}) overlap",
                                  subject, sorted[i - 1].start, sorted[i - 1].end, iv.start,
                                  iv.end));
      }
      if (ds.class_index(iv.activity) < 0) {
        out.push_back(fmt::format("subject {}: activity '{}' is not in the class set", subject,
                                  iv.activity));
      }
    }
  }
  return out;
}

void check_dataset(const SensorDataset& ds) {
  auto diags = dataset_diagnostics(ds);
  if (!diags.empty()) throw ValidationError(diags.front());
}

bool FeatureTable::has_group(std::string_view sensor_id) const {
  return std::any_of(column_groups.begin(), column_groups.end(),
                     [&](const ColumnGroup& g) { return g.sensor_id == sensor_id; });
}

const ColumnGroup& FeatureTable::group(std::string_view sensor_id) const {
  for (const auto& g : column_groups) {
    if (g.sensor_id == sensor_id) return g;
  }
  throw ValidationError(fmt::format("unknown sensor group '{}' (available: {})", sensor_id,
                                    fmt::join(sensor_ids(), ", ")));
}

std::vector<std::string> FeatureTable::sensor_ids() const {
  std::vector<std::string> ids;
  ids.reserve(column_groups.size());
  for (const auto& g : column_groups) ids.push_back(g.sensor_id);
  return ids;
}

std::vector<std::string> FeatureTable::subjects() const {
  std::vector<std::string> out;
  for (const auto& s : subject_of_row) {
    if (out.empty() || out.back() != s) {
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
  }
  return out;
}

std::vector<std::size_t> FeatureTable::labeled_rows() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < label_of_row.size(); ++i) {
    if (label_of_row[i] != kUnlabeled) idx.push_back(i);
  }
  return idx;
}

void check_table(const FeatureTable& t) {
  const std::size_t n = t.num_rows();
  if (t.subject_of_row.size() != n || t.label_of_row.size() != n || t.window_meta.size() != n) {
    throw ValidationError("feature table metadata length does not match row count");
  }
  if (t.column_names.size() != t.num_cols()) {
    throw ValidationError("feature table column names do not match column count");
  }
  std::size_t next = 0;
  for (const auto& g : t.column_groups) {
    if (g.begin != next || g.end < g.begin) {
      throw ValidationError(fmt::format("column group '{}' is not contiguous", g.sensor_id));
    }
    next = g.end;
  }
  if (next != t.num_cols()) {
    throw ValidationError("column groups do not cover every column exactly once");
  }
  for (ClassIndex y : t.label_of_row) {
    if (y != kUnlabeled && (y < 0 || static_cast<std::size_t>(y) >= t.class_set.size())) {
      throw ValidationError(fmt::format("row label {} outside the class set", y));
    }
  }
  if (!t.rows.allFinite()) throw ValidationError("feature table contains non-finite values");
  std::set<std::string> closed;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && t.subject_of_row[i] != t.subject_of_row[i - 1]) {
      closed.insert(t.subject_of_row[i - 1]);
    }
    if (closed.contains(t.subject_of_row[i])) {
      throw ValidationError(
          fmt::format("rows of subject '{}' are not contiguous", t.subject_of_row[i]));
    }
  }
}

FeatureTable select_sensor_columns(const FeatureTable& table,
                                   std::span<const std::string> sensor_ids) {
  std::vector<const ColumnGroup*> picked;
  for (const auto& id : sensor_ids) {
    if (!table.has_group(id)) {
      throw ValidationError(fmt::format("unknown sensor id '{}'; available sensor ids: {}", id,
                                        fmt::join(table.sensor_ids(), ", ")));
    }
    picked.push_back(&table.group(id));
  }

  std::size_t width = 0;
  for (const auto* g : picked) width += g->size();

  FeatureTable out;
  out.rows.resize(table.rows.rows(), static_cast<Eigen::Index>(width));
  out.subject_of_row = table.subject_of_row;
  out.label_of_row = table.label_of_row;
  out.class_set = table.class_set;
  out.window_meta = table.window_meta;

  std::size_t col = 0;
  for (const auto* g : picked) {
    out.rows.middleCols(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(g->size())) =
        table.rows.middleCols(static_cast<Eigen::Index>(g->begin),
                              static_cast<Eigen::Index>(g->size()));
    out.column_groups.push_back({g->sensor_id, col, col + g->size()});
    for (std::size_t c = g->begin; c < g->end; ++c) out.column_names.push_back(table.column_names[c]);
    col += g->size();
  }
  return out;
}

FeatureTable take_rows(const FeatureTable& table, std::span<const std::size_t> indices) {
  FeatureTable out;
  out.rows.resize(static_cast<Eigen::Index>(indices.size()), table.rows.cols());
  out.class_set = table.class_set;
  out.column_groups = table.column_groups;
  out.column_names = table.column_names;
  out.subject_of_row.reserve(indices.size());
  out.label_of_row.reserve(indices.size());
  out.window_meta.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= table.num_rows()) throw Error("take_rows: row index out of range");
    out.rows.row(static_cast<Eigen::Index>(i)) = table.rows.row(static_cast<Eigen::Index>(src));
    out.subject_of_row.push_back(table.subject_of_row[src]);
    out.label_of_row.push_back(table.label_of_row[src]);
    out.window_meta.push_back(table.window_meta[src]);
  }
  return out;
}

SubjectSplit split_by_subject(const FeatureTable& table, std::string_view held_out) {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    (table.subject_of_row[i] == held_out ? test_idx : train_idx).push_back(i);
  }
  if (test_idx.empty()) {
    throw ValidationError(fmt::format("subject '{}' does not appear in the table", held_out));
  }
  return {take_rows(table, train_idx), take_rows(table, test_idx)};
}

FeatureTable labeled_part(const FeatureTable& table) {
  const auto idx = table.labeled_rows();
  return take_rows(table, idx);
}

}  // namespace xsense
