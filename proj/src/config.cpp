#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "xsense/experiment.hpp"

namespace xsense {
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kVariantNames = {"Trad", "Clusters", "LinR", "LogR", "LinB", "LogB"};

void reject_unknown_keys(const json& j, std::span<const std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw ValidationError(fmt::format("{}: expected an object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

std::string_view to_string(RepresentationRows r) { return r == RepresentationRows::all ? "all" : "unlabeled_only"; }

RepresentationRows parse_representation_rows(std::string_view text) {
  if (text == "all") return RepresentationRows::all;
  if (text == "unlabeled_only") return RepresentationRows::unlabeled_only;
  throw ValidationError(fmt::format("unknown representation_rows '{}' (expected all or unlabeled_only)", text));
}

DatasetSource source_from_json(const json& j, const std::filesystem::path& base_dir) {
  constexpr std::array<std::string_view, 3> keys = {"manifest", "synthetic", "max_gap_s"};
  reject_unknown_keys(j, keys, "dataset");
  DatasetSource src;
  const bool has_manifest = j.contains("manifest");
  if (has_manifest == j.contains("synthetic")) {
    throw ValidationError("dataset: give exactly one of 'manifest' or 'synthetic'");
  }
  if (has_manifest) {
    src.manifest = j.at("manifest").get<std::string>();
    if (src.manifest.is_relative() && !base_dir.empty()) src.manifest = base_dir / src.manifest;
  } else {
    src.synthetic = synthetic_from_json(j.at("synthetic"));
  }
  src.max_gap_s = j.value("max_gap_s", src.max_gap_s);
  if (!(src.max_gap_s > 0.0)) throw ValidationError("dataset: max_gap_s must be positive");
  return src;
}

json source_to_json(const DatasetSource& s) {
  json j;
  if (s.synthetic) {
    j["synthetic"] = synthetic_to_json(*s.synthetic);
  } else {
    j["manifest"] = s.manifest.generic_string();
  }
  j["max_gap_s"] = s.max_gap_s;
  return j;
}

constexpr std::array<std::string_view, 13> kCellKeys = {
    "dataset",      "window",   "test_sensor",     "training_sensors", "variant",
    "k_per_sensor", "encoding", "kmeans_restarts", "linear_lambda",    "logistic_lambda",
    "classifier",   "representation_rows", "seed"};

// Everything except the per-cell test_sensor / variant.
void read_common(const json& j, const std::filesystem::path& base_dir, ExperimentConfig& c) {
  c.dataset = source_from_json(j.at("dataset"), base_dir);
  if (j.contains("window")) c.window = window_spec_from_json(j.at("window"));
  c.training_sensors = j.value("training_sensors", std::vector<std::string>{});
  c.k_per_sensor = j.value("k_per_sensor", c.k_per_sensor);
  c.encoding = parse_encoding_mode(j.value("encoding", std::string(to_string(c.encoding))));
  c.kmeans_restarts = j.value("kmeans_restarts", c.kmeans_restarts);
  c.linear_lambda = j.value("linear_lambda", c.linear_lambda);
  c.logistic_lambda = j.value("logistic_lambda", c.logistic_lambda);
  if (j.contains("classifier")) {
    const auto& cj = j.at("classifier");
    constexpr std::array<std::string_view, 3> keys = {"c_inv", "max_epochs", "grad_tol"};
    reject_unknown_keys(cj, keys, "classifier");
    c.classifier.c_inv = cj.value("c_inv", c.classifier.c_inv);
    c.classifier.max_epochs = cj.value("max_epochs", c.classifier.max_epochs);
    c.classifier.grad_tol = cj.value("grad_tol", c.classifier.grad_tol);
  }
  c.representation_rows =
      parse_representation_rows(j.value("representation_rows", std::string(to_string(c.representation_rows))));
  c.seed.value = j.value("seed", c.seed.value);

  if (c.k_per_sensor < 1) throw ValidationError("k_per_sensor must be at least 1");
  if (c.kmeans_restarts < 1) throw ValidationError("kmeans_restarts must be at least 1");
  if (!(c.linear_lambda >= 0.0) || !(c.logistic_lambda >= 0.0)) {
    throw ValidationError("mapping lambdas must be nonnegative");
  }
  if (!(c.classifier.c_inv >= 0.0)) throw ValidationError("classifier.c_inv must be nonnegative");
  if (c.classifier.max_epochs < 1) throw ValidationError("classifier.max_epochs must be at least 1");
}

template <class F>
auto wrap_json_errors(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", what, e.what()));
  }
}

}  // namespace

std::string_view to_string(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

Variant parse_variant(std::string_view text) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == text) return static_cast<Variant>(i);
  }
  throw ValidationError(
      fmt::format("unknown variant '{}' (expected one of {})", text, fmt::join(kVariantNames, ", ")));
}

bool uses_mapping(Variant v) {
  return v == Variant::LinR || v == Variant::LogR || v == Variant::LinB || v == Variant::LogB;
}

bool is_boosted(Variant v) { return v == Variant::LinB || v == Variant::LogB; }

MappingKind mapping_kind(Variant v) {
  return v == Variant::LogR || v == Variant::LogB ? MappingKind::logistic : MappingKind::linear;
}

json to_json(const ExperimentConfig& c) {
  return {{"dataset", source_to_json(c.dataset)},
          {"window", to_json(c.window)},
          {"test_sensor", c.test_sensor},
          {"training_sensors", c.training_sensors},
          {"variant", std::string(to_string(c.variant))},
          {"k_per_sensor", c.k_per_sensor},
          {"encoding", std::string(to_string(c.encoding))},
          {"kmeans_restarts", c.kmeans_restarts},
          {"linear_lambda", c.linear_lambda},
          {"logistic_lambda", c.logistic_lambda},
          {"classifier",
           {{"c_inv", c.classifier.c_inv},
            {"max_epochs", c.classifier.max_epochs},
            {"grad_tol", c.classifier.grad_tol}}},
          {"representation_rows", std::string(to_string(c.representation_rows))},
          {"seed", c.seed.value}};
}

ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  return wrap_json_errors("experiment config", [&] {
    reject_unknown_keys(j, kCellKeys, "experiment config");
    ExperimentConfig c;
    read_common(j, base_dir, c);
    c.test_sensor = j.at("test_sensor").get<std::string>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    return c;
  });
}

std::vector<ExperimentConfig> GridConfig::cells() const {
  std::vector<ExperimentConfig> out;
  for (const auto& sensor : test_sensors) {
    for (Variant v : variants) {
      ExperimentConfig c = base;
      c.test_sensor = sensor;
      c.variant = v;
      out.push_back(std::move(c));
    }
  }
  return out;
}

GridConfig grid_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  return wrap_json_errors("grid config", [&] {
    std::vector<std::string_view> known(kCellKeys.begin(), kCellKeys.end());
    known.push_back("test_sensors");
    known.push_back("variants");
    reject_unknown_keys(j, known, "grid config");
    GridConfig g;
    read_common(j, base_dir, g.base);
    if (j.contains("test_sensors")) {
      g.test_sensors = j.at("test_sensors").get<std::vector<std::string>>();
    } else {
      g.test_sensors = {j.at("test_sensor").get<std::string>()};
    }
    if (j.contains("variants")) {
      for (const auto& v : j.at("variants")) g.variants.push_back(parse_variant(v.get<std::string>()));
    } else if (j.contains("variant")) {
      g.variants = {parse_variant(j.at("variant").get<std::string>())};
    } else {
      g.variants.assign(kAllVariants.begin(), kAllVariants.end());
    }
    if (g.test_sensors.empty()) throw ValidationError("grid config: no test sensors");
    if (g.variants.empty()) throw ValidationError("grid config: no variants");
    std::set<std::string> seen(g.test_sensors.begin(), g.test_sensors.end());
    if (seen.size() != g.test_sensors.size()) throw ValidationError("grid config: duplicate test sensor");
    std::set<Variant> seen_v(g.variants.begin(), g.variants.end());
    if (seen_v.size() != g.variants.size()) throw ValidationError("grid config: duplicate variant");
    g.base.test_sensor = g.test_sensors.front();
    g.base.variant = g.variants.front();
    return g;
  });
}

json to_json(const GridConfig& g) {
  json j = to_json(g.base);
  j.erase("test_sensor");
  j.erase("variant");
  j["test_sensors"] = g.test_sensors;
  json vs = json::array();
  for (Variant v : g.variants) vs.push_back(std::string(to_string(v)));
  j["variants"] = vs;
  return j;
}

GridConfig load_grid_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return grid_config_from_json(j, path.parent_path());
}

}  // namespace xsense
