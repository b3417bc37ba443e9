#include "xsense/compare.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace xsense {

std::optional<double> ComparisonTable::delta_pp(std::size_t row, std::size_t col) const {
  const auto trad = std::find(variants.begin(), variants.end(), Variant::Trad);
  if (trad == variants.end()) return std::nullopt;
  const auto& base = cells[row][static_cast<std::size_t>(trad - variants.begin())];
  const auto& v = cells[row][col];
  if (!base || !v) return std::nullopt;
  return 100.0 * (*v - *base);
}

ComparisonTable compare_runs(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw ValidationError("compare: no reports");
  auto source_key = [](const DatasetSource& src) {
    return src.synthetic ? synthetic_to_json(*src.synthetic) : nlohmann::json(src.manifest.generic_string());
  };
  const auto dataset = source_key(reports.front().config.dataset);
  const auto window = to_json(reports.front().config.window);

  ComparisonTable t;
  for (const auto& r : reports) {
    if (source_key(r.config.dataset) != dataset || r.dataset_name != reports.front().dataset_name) {
      throw ValidationError(fmt::format("compare: report for {}/{} uses a different dataset",
                                        r.config.test_sensor, to_string(r.config.variant)));
    }
    if (to_json(r.config.window) != window) {
      throw ValidationError(fmt::format("compare: report for {}/{} uses a different window spec",
                                        r.config.test_sensor, to_string(r.config.variant)));
    }
    if (std::find(t.sensors.begin(), t.sensors.end(), r.config.test_sensor) == t.sensors.end()) {
      t.sensors.push_back(r.config.test_sensor);
    }
  }
  for (Variant v : kAllVariants) {
    const bool present = std::any_of(reports.begin(), reports.end(),
                                     [v](const RunReport& r) { return r.config.variant == v; });
    if (present) t.variants.push_back(v);
  }
  t.cells.assign(t.sensors.size(), std::vector<std::optional<double>>(t.variants.size()));
  for (const auto& r : reports) {
    const auto row = static_cast<std::size_t>(
        std::find(t.sensors.begin(), t.sensors.end(), r.config.test_sensor) - t.sensors.begin());
    const auto col = static_cast<std::size_t>(
        std::find(t.variants.begin(), t.variants.end(), r.config.variant) - t.variants.begin());
    if (t.cells[row][col]) {
      throw ValidationError(fmt::format("compare: two reports for {}/{}", r.config.test_sensor,
                                        to_string(r.config.variant)));
    }
    t.cells[row][col] = r.pooled_micro_f1;
  }
  for (const auto& row : t.cells) {
    std::size_t best = 0;
    std::optional<double> best_v;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] && (!best_v || *row[c] > *best_v)) {
        best = c;
        best_v = row[c];
      }
    }
    t.best.push_back(best);
  }
  return t;
}

std::string ComparisonTable::to_csv() const {
  std::string out = "test_sensor";
  for (Variant v : variants) out += fmt::format(",{}", to_string(v));
  out += ",best";
  for (Variant v : variants) {
    if (v != Variant::Trad) out += fmt::format(",delta_pp_{}", to_string(v));
  }
  out += "\n";
  for (std::size_t r = 0; r < sensors.size(); ++r) {
    out += sensors[r];
    for (const auto& c : cells[r]) out += c ? fmt::format(",{:.4f}", *c) : ",";
    out += fmt::format(",{}", to_string(variants[best[r]]));
    for (std::size_t c = 0; c < variants.size(); ++c) {
      if (variants[c] == Variant::Trad) continue;
      const auto d = delta_pp(r, c);
      out += d ? fmt::format(",{:+.1f}", *d) : ",";
    }
    out += "\n";
  }
  return out;
}

std::string ComparisonTable::to_text() const {
  // Cell text: score, delta vs Trad in parentheses, "*" on the row best.
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"sensor"};
  for (Variant v : variants) header.emplace_back(to_string(v));
  grid.push_back(header);
  for (std::size_t r = 0; r < sensors.size(); ++r) {
    std::vector<std::string> line{sensors[r]};
    for (std::size_t c = 0; c < variants.size(); ++c) {
      if (!cells[r][c]) {
        line.emplace_back("-");
        continue;
      }
      std::string cell = fmt::format("{:.4f}", *cells[r][c]);
      if (variants[c] != Variant::Trad) {
        if (const auto d = delta_pp(r, c)) cell += fmt::format(" ({:+.1f})", *d);
      }
      if (best[r] == c) cell += " *";
      line.push_back(cell);
    }
    grid.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) {
        out += fmt::format("{:<{}}", line[c], width[c]);
      } else {
        out += fmt::format("  {:>{}}", line[c], width[c]);
      }
    }
    out += "\n";
  }
  out += "* best per row; (+x.x) = percentage points vs Trad\n";
  return out;
}

}  // namespace xsense
