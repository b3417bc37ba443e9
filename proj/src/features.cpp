#include "xsense/features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace xsense {
using nlohmann::json;

namespace {
constexpr double kTimeEps = 1e-9;
}

std::string_view to_string(LabelRule rule) {
  return rule == LabelRule::majority ? "majority" : "strict";
}

LabelRule parse_label_rule(std::string_view text) {
  if (text == "majority") return LabelRule::majority;
  if (text == "strict") return LabelRule::strict;
  throw ValidationError(fmt::format("unknown label rule '{}' (expected majority or strict)", text));
}

void WindowSpec::validate() const {
  if (!(length_s > 0.0) || !std::isfinite(length_s)) {
    throw ValidationError("window length must be positive");
  }
  if (!(step_s > 0.0) || !std::isfinite(step_s)) throw ValidationError("window step must be positive");
  if (!(min_valid_fraction > 0.0 && min_valid_fraction <= 1.0)) {
    throw ValidationError("min_valid_fraction must lie in (0, 1]");
  }
}

WindowSpec window_spec_from_json(const json& j) {
  WindowSpec w;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "cooking") w = WindowSpec::cooking();
    else if (preset == "opp_high_level") w = WindowSpec::opp_high_level();
    else if (preset == "opp_locomotion") w = WindowSpec::opp_locomotion();
    else if (preset == "pamap") w = WindowSpec::pamap();
    else throw ValidationError(fmt::format("unknown window preset '{}'", preset));
  }
  try {
    w.length_s = j.value("length_s", w.length_s);
    w.step_s = j.value("step_s", w.step_s);
    w.min_valid_fraction = j.value("min_valid_fraction", w.min_valid_fraction);
    if (j.contains("label_rule")) w.label_rule = parse_label_rule(j.at("label_rule").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("window: {}", e.what()));
  }
  w.validate();
  return w;
}

json to_json(const WindowSpec& w) {
  return {{"length_s", w.length_s},
          {"step_s", w.step_s},
          {"min_valid_fraction", w.min_valid_fraction},
          {"label_rule", std::string(to_string(w.label_rule))}};
}

WindowStats window_stats(std::span<const double> values) {
  if (values.empty()) throw Error("window_stats: empty window");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  double lo = values[0];
  double hi = values[0];
  for (double v : values) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  WindowStats st;
  st.mean = lo == hi ? lo : sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.std = std::sqrt(ss / n);
  st.range = hi - lo;

  std::vector<double> sorted(values.begin(), values.end());
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double median = sorted[mid];
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  st.mean_minus_median = st.mean - median;
  return st;
}

namespace {

std::optional<ClassIndex> window_label(const std::vector<LabelInterval>& intervals,
                                       const SensorDataset& ds, double start, double end,
                                       LabelRule rule, bool& drop) {
  drop = false;
  if (rule == LabelRule::strict) {
    int overlapping = 0;
    const LabelInterval* container = nullptr;
    for (const auto& iv : intervals) {
      const double ov = std::min(end, iv.end) - std::max(start, iv.start);
      if (ov <= kTimeEps) continue;
      ++overlapping;
      if (iv.start <= start + kTimeEps && iv.end >= end - kTimeEps) container = &iv;
    }
    if (overlapping == 0) return std::nullopt;
    if (overlapping == 1 && container != nullptr) return ds.class_index(container->activity);
    drop = true;
    return std::nullopt;
  }

  // Majority: total overlap per class, ties to the class whose first
  // overlapping interval starts earliest.
  std::vector<double> overlap(ds.class_set.size(), 0.0);
  std::vector<double> first_start(ds.class_set.size(), INFINITY);
  for (const auto& iv : intervals) {
    const double ov = std::min(end, iv.end) - std::max(start, iv.start);
    if (ov <= kTimeEps) continue;
    const int c = ds.class_index(iv.activity);
    if (c < 0) continue;
    overlap[static_cast<std::size_t>(c)] += ov;
    first_start[static_cast<std::size_t>(c)] = std::min(first_start[static_cast<std::size_t>(c)], iv.start);
  }
  int best = -1;
  for (std::size_t c = 0; c < overlap.size(); ++c) {
    if (overlap[c] <= 0.0) continue;
    if (best < 0) {
      best = static_cast<int>(c);
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    if (overlap[c] > overlap[b] + kTimeEps ||
        (std::abs(overlap[c] - overlap[b]) <= kTimeEps && first_start[c] < first_start[b])) {
      best = static_cast<int>(c);
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

}  // namespace

FeatureTable window_features(const SensorDataset& ds, const WindowSpec& spec) {
  spec.validate();

  FeatureTable table;
  table.class_set = ds.class_set;

  struct ChannelSlot {
    std::string sensor_id;
    std::string channel_id;
  };
  std::vector<ChannelSlot> slots;
  for (const auto& sensor : ds.sensor_ids()) {
    const std::size_t begin = slots.size() * kFeaturesPerChannel;
    for (const auto& channel : ds.channel_ids(sensor)) {
      slots.push_back({sensor, channel});
      for (const char* f : {"mean", "std", "range", "mean_minus_median"}) {
        table.column_names.push_back(fmt::format("{}/{}/{}", sensor, channel, f));
      }
    }
    table.column_groups.push_back({sensor, begin, slots.size() * kFeaturesPerChannel});
  }
  const std::size_t width = slots.size() * kFeaturesPerChannel;

  std::vector<Eigen::RowVectorXd> out_rows;
  static const std::vector<LabelInterval> kNoLabels;

  for (const auto& subject : ds.subjects) {
    std::vector<const SensorChannel*> chans;
    for (const auto& slot : slots) {
      auto it = ds.channels.find(ChannelKey{subject, slot.sensor_id, slot.channel_id});
      if (it == ds.channels.end() || it->second.samples.empty()) {
        throw ValidationError(fmt::format("subject '{}' has no samples for channel {}/{}", subject,
                                          slot.sensor_id, slot.channel_id));
      }
      chans.push_back(&it->second);
    }
    double t0 = INFINITY;
    double t1 = -INFINITY;
    for (const auto* ch : chans) {
      t0 = std::min(t0, ch->begin_time());
      t1 = std::max(t1, ch->end_time());
    }
    const double duration = t1 - t0;
    if (duration < spec.length_s - kTimeEps) continue;
    const auto n_windows =
        static_cast<std::size_t>(std::floor((duration - spec.length_s) / spec.step_s + kTimeEps)) + 1;

    auto lit = ds.labels.find(subject);
    const auto& intervals = lit == ds.labels.end() ? kNoLabels : lit->second;

    struct Slot {
      bool keep = false;
      Eigen::RowVectorXd row;
      ClassIndex label = kUnlabeled;
      TimeWindow window;
    };
    std::vector<Slot> results(n_windows);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(n_windows); ++w) {
      Slot& slot = results[static_cast<std::size_t>(w)];
      const double start = t0 + static_cast<double>(w) * spec.step_s;
      const double end = start + spec.length_s;
      slot.window = {start, end};

      bool drop = false;
      auto label = window_label(intervals, ds, start, end, spec.label_rule, drop);
      if (drop) continue;
      slot.label = label.value_or(kUnlabeled);

      slot.row.resize(static_cast<Eigen::Index>(width));
      std::vector<double> values;
      bool ok = true;
      for (std::size_t c = 0; c < chans.size() && ok; ++c) {
        const auto& samples = chans[c]->samples;
        auto first = std::lower_bound(samples.begin(), samples.end(), start - kTimeEps,
                                      [](const Sample& s, double t) { return s.timestamp < t; });
        auto last = std::lower_bound(first, samples.end(), end - kTimeEps,
                                     [](const Sample& s, double t) { return s.timestamp < t; });
        const auto total = static_cast<std::size_t>(last - first);
        values.clear();
        for (auto it = first; it != last; ++it) {
          if (it->valid) values.push_back(it->value);
        }
        if (total == 0 || values.empty() ||
            static_cast<double>(values.size()) < spec.min_valid_fraction * static_cast<double>(total) - 1e-9) {
          ok = false;
          break;
        }
        const auto st = window_stats(values);
        const auto base = static_cast<Eigen::Index>(c * kFeaturesPerChannel);
        slot.row[base + 0] = st.mean;
        slot.row[base + 1] = st.std;
        slot.row[base + 2] = st.range;
        slot.row[base + 3] = st.mean_minus_median;
      }
      slot.keep = ok;
    }

    for (auto& r : results) {
      if (!r.keep) continue;
      out_rows.push_back(std::move(r.row));
      table.subject_of_row.push_back(subject);
      table.label_of_row.push_back(r.label);
      table.window_meta.push_back(r.window);
    }
  }

  if (out_rows.empty()) throw ValidationError("windowing produced zero rows");
  table.rows.resize(static_cast<Eigen::Index>(out_rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < out_rows.size(); ++i) {
    table.rows.row(static_cast<Eigen::Index>(i)) = out_rows[i];
  }
  return table;
}

Standardizer::Standardizer(Vector mean, Vector std) : mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.size() != std_.size()) throw Error("standardizer: mean/std length mismatch");
}

Standardizer Standardizer::fit(const Matrix& rows) {
  if (rows.rows() == 0) throw ValidationError("standardizer: cannot fit on an empty table");
  const auto n = static_cast<double>(rows.rows());
  Vector mean(rows.cols());
  Vector std(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const auto col = rows.col(c);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    mean[c] = lo == hi ? lo : col.sum() / n;
    const double var = (col.array() - mean[c]).square().sum() / n;
    std[c] = std::max(std::sqrt(var), kStdFloor);
  }
  return {std::move(mean), std::move(std)};
}

Matrix Standardizer::apply(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != num_cols()) {
    throw ValidationError(fmt::format("standardizer fitted on {} columns applied to {} columns",
                                      num_cols(), rows.cols()));
  }
  Matrix out = rows;
  out.rowwise() -= mean_.transpose();
  out.array().rowwise() /= std_.transpose().array();
  return out;
}

json Standardizer::to_json() const {
  return {{"mean", std::vector<double>(mean_.begin(), mean_.end())},
          {"std", std::vector<double>(std_.begin(), std_.end())}};
}

Standardizer Standardizer::from_json(const json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  return {Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size())),
          Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()))};
}

Standardizer fit_standardizer(const FeatureTable& table) { return Standardizer::fit(table.rows); }

FeatureTable apply_standardizer(const Standardizer& st, const FeatureTable& table) {
  FeatureTable out = table;
  out.rows = st.apply(table.rows);
  return out;
}

}  // namespace xsense
