#include "xsense/experiment.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace xsense {
using nlohmann::json;

void LeakAudit::record(std::string_view stage, std::span<const std::string> subject_of_row) {
  FitEvent ev{std::string(stage), {}};
  for (const auto& s : subject_of_row) {
    if (ev.subjects.empty() || ev.subjects.back() != s) {
      if (std::find(ev.subjects.begin(), ev.subjects.end(), s) == ev.subjects.end()) ev.subjects.push_back(s);
    }
  }
  events_.push_back(ev);
  if (std::find(ev.subjects.begin(), ev.subjects.end(), held_out_) != ev.subjects.end()) {
    throw LeakError(fmt::format("held-out subject '{}' reached fitting stage '{}'", held_out_, stage));
  }
}

PreparedData prepare_data(const DatasetSource& source, const WindowSpec& window) {
  SensorDataset ds;
  if (source.synthetic) {
    ds = generate_synthetic(*source.synthetic);
  } else {
    if (source.manifest.empty()) throw ValidationError("dataset: no manifest or synthetic spec given");
    ds = load_dataset(load_manifest(source.manifest));
  }
  ds = impute_missing(ds, source.max_gap_s);
  PreparedData out;
  out.dataset_name = ds.name;
  out.sensor_tiers = ds.sensor_tiers;
  out.table = window_features(ds, window);
  return out;
}

ExperimentConfig resolve_config(const ExperimentConfig& config, const PreparedData& data) {
  ExperimentConfig c = config;
  const auto& table = data.table;
  if (!table.has_group(c.test_sensor)) {
    throw ValidationError(fmt::format("test sensor '{}' not in dataset (available: {})", c.test_sensor,
                                      fmt::join(table.sensor_ids(), ", ")));
  }
  if (c.training_sensors.empty()) {
    for (const auto& id : table.sensor_ids()) {
      const auto it = data.sensor_tiers.find(id);
      if (it == data.sensor_tiers.end() || it->second == QualityTier::high) c.training_sensors.push_back(id);
    }
    if (c.training_sensors.empty()) throw ValidationError("no high-quality sensors to learn a representation from");
  }
  for (const auto& id : c.training_sensors) {
    if (!table.has_group(id)) {
      throw ValidationError(fmt::format("training sensor '{}' not in dataset (available: {})", id,
                                        fmt::join(table.sensor_ids(), ", ")));
    }
  }
  auto sorted = c.training_sensors;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("training sensors contain a duplicate");
  }
  const auto subjects = table.subjects();
  if (subjects.size() < 2) {
    throw ValidationError(fmt::format("leave-one-subject-out needs at least 2 subjects, got {}", subjects.size()));
  }
  if (table.labeled_rows().empty()) throw ValidationError("dataset has no labelled windows");
  return c;
}

namespace {

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

RepresentationOptions representation_options(const ExperimentConfig& c) {
  RepresentationOptions o;
  o.k_per_sensor = c.k_per_sensor;
  o.mode = c.encoding;
  o.restarts = c.kmeans_restarts;
  return o;
}

}  // namespace

Pipeline fit_pipeline(const ExperimentConfig& config, const FeatureTable& train, LeakAudit* audit,
                      const RunHooks& hooks) {
  auto observe = [&](std::string_view stage, const FeatureTable& t) {
    if (audit) audit->record(stage, t.subject_of_row);
  };
  const RngSeed seed = config.seed;

  Pipeline p;
  p.variant = config.variant;
  p.test_sensor = config.test_sensor;
  p.training_sensors = config.training_sensors;
  p.class_set = train.class_set;
  p.mapping_override = hooks.mapping_override;
  const std::size_t k = train.num_classes();

  const std::vector<std::string> test_ids{config.test_sensor};
  const bool needs_single = config.variant != Variant::Clusters;
  FeatureTable single;
  if (needs_single) {
    single = select_sensor_columns(train, test_ids);
    observe("standardize/single", single);
    p.single_standardizer = fit_standardizer(single);
    single = apply_standardizer(*p.single_standardizer, single);
  }

  if (config.variant == Variant::Trad) {
    const FeatureTable lab = labeled_part(single);
    observe("classifier", lab);
    const auto w = uniform_weights(lab.num_rows());
    p.classifier = std::make_shared<LinearClassifier>(
        fit_classifier(lab.rows, lab.label_of_row, k, w, config.classifier, seed.derive("classifier")));
    return p;
  }

  FeatureTable multi = select_sensor_columns(train, config.training_sensors);
  observe("standardize/multi", multi);
  p.multi_standardizer = fit_standardizer(multi);
  multi = apply_standardizer(*p.multi_standardizer, multi);

  FeatureTable rep_rows = multi;
  if (config.representation_rows == RepresentationRows::unlabeled_only) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < multi.num_rows(); ++i) {
      if (multi.label_of_row[i] == kUnlabeled) idx.push_back(i);
    }
    if (idx.empty()) throw ValidationError("representation_rows = unlabeled_only but the training data has no unlabeled rows");
    rep_rows = take_rows(multi, idx);
  }
  observe("representation", rep_rows);
  p.representation = learn_representation(rep_rows, representation_options(config), seed.derive("representation"));

  if (config.variant == Variant::Clusters) {
    const FeatureTable lab = labeled_part(multi);
    observe("classifier", lab);
    const Matrix enc = encode(*p.representation, lab);
    const auto w = uniform_weights(lab.num_rows());
    p.classifier = std::make_shared<LinearClassifier>(
        fit_classifier(enc, lab.label_of_row, k, w, config.classifier, seed.derive("classifier")));
    return p;
  }

  // Mapping variants: pair each training window's single-sensor features
  // with its multi-sensor encoding.
  Matrix mapped;
  const FeatureTable single_lab = labeled_part(single);
  if (hooks.mapping_override) {
    mapped = hooks.mapping_override(*p.representation, single_lab);
  } else {
    const Matrix targets = encode(*p.representation, multi);
    observe("mapping", single);
    const MappingOptions mopts = mapping_kind(config.variant) == MappingKind::linear
                                     ? MappingOptions::linear(config.linear_lambda)
                                     : MappingOptions::logistic(config.logistic_lambda);
    p.mapping = fit_mapping(single, targets, mopts, seed.derive("mapping"));
    mapped = apply_mapping(*p.mapping, single_lab);
  }
  observe("classifier", single_lab);
  if (is_boosted(config.variant)) {
    p.ensemble = fit_boosted(mapped, single_lab.rows, single_lab.label_of_row, k,
                             linear_trainer(config.classifier, seed.derive("classifier")));
  } else {
    const auto w = uniform_weights(single_lab.num_rows());
    p.classifier = std::make_shared<LinearClassifier>(
        fit_classifier(mapped, single_lab.label_of_row, k, w, config.classifier, seed.derive("classifier")));
  }
  return p;
}

std::vector<ClassIndex> Pipeline::predict(const FeatureTable& table) const {
  const std::vector<std::string> test_ids{test_sensor};
  if (variant == Variant::Clusters) {
    const FeatureTable multi = apply_standardizer(*multi_standardizer, select_sensor_columns(table, training_sensors));
    return classifier->predict(encode(*representation, multi));
  }
  const FeatureTable single = apply_standardizer(*single_standardizer, select_sensor_columns(table, test_ids));
  if (variant == Variant::Trad) return classifier->predict(single.rows);
  Matrix mapped;
  if (mapping_override) {
    mapped = mapping_override(*representation, single);
  } else {
    if (!mapping) throw Error("pipeline has no mapping; it was trained with a mapping override that is not attached");
    mapped = apply_mapping(*mapping, single);
  }
  if (ensemble) return ensemble->predict(mapped, single.rows);
  return classifier->predict(mapped);
}

json Pipeline::to_json() const {
  json j{{"kind", "pipeline"},
         {"version", 1},
         {"variant", std::string(xsense::to_string(variant))},
         {"test_sensor", test_sensor},
         {"training_sensors", training_sensors},
         {"class_set", class_set}};
  if (multi_standardizer) j["multi_standardizer"] = multi_standardizer->to_json();
  if (single_standardizer) j["single_standardizer"] = single_standardizer->to_json();
  if (representation) j["representation"] = representation->to_json();
  if (mapping) j["mapping"] = mapping->to_json();
  if (classifier) j["classifier"] = classifier->to_json();
  if (ensemble) j["ensemble"] = ensemble->to_json();
  return j;
}

Pipeline Pipeline::from_json(const json& j) {
  if (j.value("kind", "") != "pipeline" || j.value("version", 0) != 1) {
    throw ValidationError("not a version 1 pipeline model");
  }
  try {
    Pipeline p;
    p.variant = parse_variant(j.at("variant").get<std::string>());
    p.test_sensor = j.at("test_sensor").get<std::string>();
    p.training_sensors = j.at("training_sensors").get<std::vector<std::string>>();
    p.class_set = j.at("class_set").get<std::vector<std::string>>();
    if (j.contains("multi_standardizer")) p.multi_standardizer = Standardizer::from_json(j["multi_standardizer"]);
    if (j.contains("single_standardizer")) p.single_standardizer = Standardizer::from_json(j["single_standardizer"]);
    if (j.contains("representation")) p.representation = RepresentationModel::from_json(j["representation"]);
    if (j.contains("mapping")) p.mapping = MappingModel::from_json(j["mapping"]);
    if (j.contains("classifier")) p.classifier = classifier_from_json(j["classifier"]);
    if (j.contains("ensemble")) p.ensemble = BoostedEnsemble::from_json(j["ensemble"]);
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("pipeline model: {}", e.what()));
  }
}

json RunReport::to_json() const {
  json folds_j = json::array();
  for (const auto& f : folds) {
    folds_j.push_back({{"held_out", f.held_out},
                       {"train_rows", f.train_rows},
                       {"test_rows", f.test_rows},
                       {"micro_f1", f.micro_f1},
                       {"confusion", f.confusion.to_json()}});
  }
  return {{"kind", "run_report"},
          {"version", 1},
          {"config", xsense::to_json(config)},
          {"dataset_name", dataset_name},
          {"class_set", class_set},
          {"folds", folds_j},
          {"pooled_confusion", pooled.to_json()},
          {"pooled_micro_f1", pooled_micro_f1},
          {"mean_fold_micro_f1", mean_fold_micro_f1},
          {"precision", precision},
          {"recall", recall},
          {"leak_checks", leak_checks}};
}

RunReport RunReport::from_json(const json& j) {
  if (j.value("kind", "") != "run_report" || j.value("version", 0) != 1) {
    throw ValidationError("not a version 1 run report");
  }
  try {
    RunReport r;
    r.config = experiment_config_from_json(j.at("config"));
    r.dataset_name = j.at("dataset_name").get<std::string>();
    r.class_set = j.at("class_set").get<std::vector<std::string>>();
    for (const auto& f : j.at("folds")) {
      r.folds.push_back({f.at("held_out").get<std::string>(), f.at("train_rows").get<std::size_t>(),
                         f.at("test_rows").get<std::size_t>(), f.at("micro_f1").get<double>(),
                         ConfusionMatrix::from_json(f.at("confusion"))});
    }
    r.pooled = ConfusionMatrix::from_json(j.at("pooled_confusion"));
    r.pooled_micro_f1 = j.at("pooled_micro_f1").get<double>();
    r.mean_fold_micro_f1 = j.at("mean_fold_micro_f1").get<double>();
    r.precision = j.at("precision").get<std::vector<double>>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.leak_checks = j.at("leak_checks").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("run report: {}", e.what()));
  }
}

RunReport run_experiment(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedData data = prepare_data(config.dataset, config.window);
  RunReport r = run_experiment(config, data);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RunReport run_experiment(const ExperimentConfig& config, const PreparedData& data, const RunHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig resolved = resolve_config(config, data);

  RunReport report;
  report.config = config;
  report.dataset_name = data.dataset_name;
  report.class_set = data.table.class_set;
  report.pooled = ConfusionMatrix(data.table.num_classes());

  double f1_sum = 0.0;
  for (const auto& subject : data.table.subjects()) {
    const auto split = split_by_subject(data.table, subject);
    const FeatureTable test = labeled_part(split.test);

    ExperimentConfig fold_cfg = resolved;
    fold_cfg.seed = resolved.seed.derive("fold:" + subject);
    LeakAudit audit(subject);
    const Pipeline p = fit_pipeline(fold_cfg, split.train, &audit, hooks);

    FoldReport fold;
    fold.held_out = subject;
    fold.train_rows = split.train.labeled_rows().size();
    fold.test_rows = test.num_rows();
    fold.confusion = ConfusionMatrix(data.table.num_classes());
    if (test.num_rows() > 0) {
      const auto pred = p.predict(test);
      for (std::size_t i = 0; i < pred.size(); ++i) fold.confusion.add(test.label_of_row[i], pred[i]);
    }
    fold.micro_f1 = fold.confusion.micro_f1();
    f1_sum += fold.micro_f1;
    report.pooled += fold.confusion;
    report.leak_checks += audit.checks();
    if (hooks.on_fold) hooks.on_fold(audit);
    report.folds.push_back(std::move(fold));
  }
  report.pooled_micro_f1 = report.pooled.micro_f1();
  report.mean_fold_micro_f1 = f1_sum / static_cast<double>(report.folds.size());
  report.precision = report.pooled.precision();
  report.recall = report.pooled.recall();
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Pipeline fit_final_pipeline(const ExperimentConfig& config, const PreparedData& data) {
  ExperimentConfig c = resolve_config(config, data);
  c.seed = config.seed.derive("final");
  return fit_pipeline(c, data.table);
}

}  // namespace xsense
