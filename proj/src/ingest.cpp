#include "xsense/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace xsense {
namespace fs = std::filesystem;
using nlohmann::json;

fs::path DatasetManifest::resolve(const fs::path& p) const {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

DatasetManifest manifest_from_json(const json& j, const fs::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.name = j.value("name", std::string{"dataset"});
    for (const auto& f : j.at("sample_files")) m.sample_files.emplace_back(f.get<std::string>());
    m.label_file = j.at("label_file").get<std::string>();
    for (const auto& s : j.at("sensors")) {
      SensorDeclaration d;
      d.sensor_id = s.at("sensor_id").get<std::string>();
      d.channel_ids = s.at("channel_ids").get<std::vector<std::string>>();
      d.sampling_rate_hz = s.at("sampling_rate_hz").get<double>();
      d.quality_tier = parse_quality_tier(s.at("quality_tier").get<std::string>());
      m.sensors.push_back(std::move(d));
    }
    m.class_set = j.at("class_set").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("manifest: {}", e.what()));
  }
  if (m.sample_files.empty()) throw ValidationError("manifest: no sample files declared");
  std::set<std::string> seen;
  for (const auto& d : m.sensors) {
    if (!seen.insert(d.sensor_id).second) {
      throw ValidationError(fmt::format("manifest: sensor '{}' declared twice", d.sensor_id));
    }
    if (!(d.sampling_rate_hz > 0.0)) {
      throw ValidationError(
          fmt::format("manifest: sensor '{}' needs a positive sampling rate", d.sensor_id));
    }
    if (d.channel_ids.empty()) {
      throw ValidationError(fmt::format("manifest: sensor '{}' declares no channels", d.sensor_id));
    }
  }
  return m;
}

json manifest_to_json(const DatasetManifest& m) {
  json sensors = json::array();
  for (const auto& d : m.sensors) {
    sensors.push_back({{"sensor_id", d.sensor_id},
                       {"channel_ids", d.channel_ids},
                       {"sampling_rate_hz", d.sampling_rate_hz},
                       {"quality_tier", std::string(to_string(d.quality_tier))}});
  }
  json files = json::array();
  for (const auto& f : m.sample_files) files.push_back(f.generic_string());
  return {{"name", m.name},
          {"sample_files", files},
          {"label_file", m.label_file.generic_string()},
          {"sensors", sensors},
          {"class_set", m.class_set}};
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read manifest '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("manifest '{}': {}", path.string(), e.what()));
  }
  return manifest_from_json(j, path.parent_path());
}

namespace {

class CsvReader {
public:
  CsvReader(const fs::path& path, std::vector<std::string_view> expected_header)
      : path_(path), in_(path) {
    if (!in_) throw ValidationError(fmt::format("cannot read file '{}'", path.string()));
    if (!next()) throw ValidationError(fmt::format("{}: empty file, expected a header", name()));
    if (cells_.size() != expected_header.size() ||
        !std::equal(cells_.begin(), cells_.end(), expected_header.begin())) {
      std::string want;
      for (auto h : expected_header) want += (want.empty() ? "" : ",") + std::string(h);
      throw ValidationError(fmt::format("{}:1: header must be '{}'", name(), want));
    }
    width_ = expected_header.size();
  }

  bool next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      if (line_.empty()) continue;
      cells_.clear();
      std::size_t start = 0;
      for (;;) {
        auto comma = line_.find(',', start);
        cells_.push_back(line_.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (width_ != 0 && cells_.size() != width_) {
        throw ValidationError(fmt::format("{}:{}: expected {} columns, found {}", name(),
                                          line_no_, width_, cells_.size()));
      }
      return true;
    }
    return false;
  }

  const std::string& cell(std::size_t col) const { return cells_[col]; }

  double number(std::size_t col, bool allow_nan = false) const {
    const std::string& s = cells_[col];
    if (allow_nan && (s == "NaN" || s == "nan")) return std::nan("");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ValidationError(fmt::format("{}:{}: column {}: '{}' is not a finite number", name(),
                                        line_no_, col + 1, s));
    }
    return v;
  }

  std::string name() const { return path_.string(); }
  std::size_t line() const { return line_no_; }

private:
  fs::path path_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string> cells_;
  std::size_t line_no_ = 0;
  std::size_t width_ = 0;
};

}  // namespace

SensorDataset load_dataset(const DatasetManifest& manifest, bool check) {
  SensorDataset ds;
  ds.name = manifest.name;
  ds.class_set = manifest.class_set;

  std::map<std::string, const SensorDeclaration*> decls;
  for (const auto& d : manifest.sensors) {
    decls[d.sensor_id] = &d;
    ds.sensor_tiers[d.sensor_id] = d.quality_tier;
  }

  std::set<std::string> subjects;
  for (const auto& rel : manifest.sample_files) {
    CsvReader csv(manifest.resolve(rel), {"timestamp", "subject", "sensor_id", "channel_id", "value"});
    while (csv.next()) {
      const double t = csv.number(0);
      const std::string& subject = csv.cell(1);
      const std::string& sensor = csv.cell(2);
      const std::string& channel = csv.cell(3);
      const double v = csv.number(4, true);
      if (subject.empty()) {
        throw ValidationError(fmt::format("{}:{}: column 2: empty subject", csv.name(), csv.line()));
      }
      auto it = decls.find(sensor);
      if (it == decls.end()) {
        throw ValidationError(fmt::format("{}:{}: column 3: undeclared sensor '{}'", csv.name(),
                                          csv.line(), sensor));
      }
      const auto& chans = it->second->channel_ids;
      if (std::find(chans.begin(), chans.end(), channel) == chans.end()) {
        throw ValidationError(fmt::format("{}:{}: column 4: channel '{}' not declared for sensor '{}'",
                                          csv.name(), csv.line(), channel, sensor));
      }
      subjects.insert(subject);
      auto& ch = ds.channels[ChannelKey{subject, sensor, channel}];
      if (ch.samples.empty()) {
        ch.sensor_id = sensor;
        ch.channel_id = channel;
        ch.sampling_rate_hz = it->second->sampling_rate_hz;
      } else if (!(t > ch.samples.back().timestamp)) {
        throw ValidationError(fmt::format(
            "{}:{}: column 1: timestamp {} does not increase for {}/{}/{} (previous {})",
            csv.name(), csv.line(), t, subject, sensor, channel, ch.samples.back().timestamp));
      }
      const bool valid = !std::isnan(v);
      ch.samples.push_back({t, valid ? v : 0.0, valid});
    }
  }
  ds.subjects.assign(subjects.begin(), subjects.end());

  for (const auto& subject : ds.subjects) {
    for (const auto& d : manifest.sensors) {
      for (const auto& c : d.channel_ids) {
        if (!ds.channels.contains(ChannelKey{subject, d.sensor_id, c})) {
          throw ValidationError(fmt::format("declared channel {}/{} has no samples for subject '{}'",
                                            d.sensor_id, c, subject));
        }
      }
    }
  }

  CsvReader labels(manifest.resolve(manifest.label_file), {"subject", "start", "end", "activity"});
  while (labels.next()) {
    LabelInterval iv{labels.number(1), labels.number(2), labels.cell(3)};
    if (ds.class_index(iv.activity) < 0) {
      throw ValidationError(fmt::format("{}:{}: column 4: activity '{}' is not in the class set",
                                        labels.name(), labels.line(), iv.activity));
    }
    if (!(iv.end > iv.start)) {
      throw ValidationError(fmt::format("{}:{}: end must exceed start", labels.name(), labels.line()));
    }
    ds.labels[labels.cell(0)].push_back(std::move(iv));
  }
  for (auto& [subject, ivs] : ds.labels) {
    std::stable_sort(ivs.begin(), ivs.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
  }

  if (check) check_dataset(ds);
  return ds;
}

DatasetManifest save_dataset(const SensorDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.name = ds.name;
  m.sample_files = {"samples.csv"};
  m.label_file = "labels.csv";
  m.class_set = ds.class_set;
  m.base_dir = dir;

  for (const auto& sensor : ds.sensor_ids()) {
    SensorDeclaration d;
    d.sensor_id = sensor;
    d.channel_ids = ds.channel_ids(sensor);
    for (const auto& [key, ch] : ds.channels) {
      if (key.sensor_id == sensor) {
        d.sampling_rate_hz = ch.sampling_rate_hz;
        break;
      }
    }
    auto tier = ds.sensor_tiers.find(sensor);
    d.quality_tier = tier == ds.sensor_tiers.end() ? QualityTier::high : tier->second;
    m.sensors.push_back(std::move(d));
  }

  {
    std::ofstream out(dir / "samples.csv");
    out << "timestamp,subject,sensor_id,channel_id,value\n";
    for (const auto& [key, ch] : ds.channels) {
      for (const auto& s : ch.samples) {
        if (s.valid) {
          out << fmt::format("{},{},{},{},{}\n", s.timestamp, key.subject, key.sensor_id,
                             key.channel_id, s.value);
        } else {
          out << fmt::format("{},{},{},{},NaN\n", s.timestamp, key.subject, key.sensor_id,
                             key.channel_id);
        }
      }
    }
    if (!out) throw Error(fmt::format("failed writing {}", (dir / "samples.csv").string()));
  }
  {
    std::ofstream out(dir / "labels.csv");
    out << "subject,start,end,activity\n";
    for (const auto& [subject, ivs] : ds.labels) {
      for (const auto& iv : ivs) {
        out << fmt::format("{},{},{},{}\n", subject, iv.start, iv.end, iv.activity);
      }
    }
    if (!out) throw Error(fmt::format("failed writing {}", (dir / "labels.csv").string()));
  }
  std::ofstream(dir / "manifest.json") << manifest_to_json(m).dump(2) << '\n';
  return m;
}

SensorDataset impute_missing(const SensorDataset& ds, double max_gap_s) {
  if (!(max_gap_s > 0.0)) throw ValidationError("impute_missing: max_gap_s must be positive");
  SensorDataset out = ds;
  for (auto& [key, ch] : out.channels) {
    auto& s = ch.samples;
    const auto any_valid = std::any_of(s.begin(), s.end(), [](const Sample& x) { return x.valid; });
    if (!any_valid) {
      throw ValidationError(fmt::format("channel {}/{}/{} has no valid samples", key.subject,
                                        key.sensor_id, key.channel_id));
    }
    const double period = 1.0 / ch.sampling_rate_hz;
    std::size_t i = 0;
    while (i < s.size()) {
      if (s[i].valid) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < s.size() && !s[j].valid) ++j;
      // [i, j) is a run of invalid samples.
      const bool bounded = i > 0 && j < s.size();
      const double gap = s[j - 1].timestamp - s[i].timestamp + period;
      if (bounded && gap <= max_gap_s + 1e-9) {
        const Sample& a = s[i - 1];
        const Sample& b = s[j];
        for (std::size_t k = i; k < j; ++k) {
          const double frac = (s[k].timestamp - a.timestamp) / (b.timestamp - a.timestamp);
          s[k].value = a.value + frac * (b.value - a.value);
          s[k].valid = true;
        }
      }
      i = j;
    }
  }
  return out;
}

}  // namespace xsense
