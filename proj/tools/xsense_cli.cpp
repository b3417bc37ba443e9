// xsense: validate datasets, generate synthetic data, run and compare
// leave-one-subject-out experiments, inspect saved models and reports.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "xsense/compare.hpp"
#include "xsense/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xsense;

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2 };

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool quiet = false;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

int cmd_validate(const Options& o) {
  const fs::path path = o.config;
  DatasetManifest manifest;
  try {
    manifest = load_manifest(path);
  } catch (const Error& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kValidation;
  }
  std::vector<std::string> problems;
  for (const auto& f : manifest.sample_files) {
    if (!fs::exists(manifest.resolve(f))) problems.push_back(fmt::format("{}: file not found", manifest.resolve(f).string()));
  }
  if (!fs::exists(manifest.resolve(manifest.label_file))) {
    problems.push_back(fmt::format("{}: file not found", manifest.resolve(manifest.label_file).string()));
  }
  if (problems.empty()) {
    try {
      problems = dataset_diagnostics(load_dataset(manifest, false));
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  for (const auto& p : problems) fmt::print("{}\n", p);
  if (!problems.empty()) return kValidation;
  fmt::print("OK\n");
  return kOk;
}

int cmd_synth(const Options& o) {
  SyntheticSpec spec = synthetic_from_json(read_json(o.config));
  if (o.seed) spec.seed.value = *o.seed;
  write_json(fs::path(o.out) / "config.json", synthetic_to_json(spec));
  const auto manifest = save_dataset(generate_synthetic(spec), o.out);
  if (!o.quiet) fmt::print("wrote {}\n", (fs::path(o.out) / "manifest.json").string());
  (void)manifest;
  return kOk;
}

ExperimentConfig load_run_config(const Options& o) {
  const fs::path path = o.config;
  ExperimentConfig c = experiment_config_from_json(read_json(path), path.parent_path());
  if (o.seed) c.seed.value = *o.seed;
  return c;
}

int cmd_run(const Options& o) {
  const ExperimentConfig c = load_run_config(o);
  const fs::path out = o.out;
  write_json(out / "config.json", to_json(c));
  const PreparedData data = prepare_data(c.dataset, c.window);
  const RunReport report = run_experiment(c, data);
  write_json(out / "report.json", report.to_json());
  write_json(out / "timing.json", {{"wall_time_s", report.wall_time_s}});
  write_json(out / "model.json", fit_final_pipeline(c, data).to_json());
  if (!o.quiet) {
    fmt::print("{} {} on {}: pooled micro-F1 {:.4f} over {} folds\n", to_string(c.variant), c.test_sensor,
               report.dataset_name, report.pooled_micro_f1, report.folds.size());
  }
  return kOk;
}

int cmd_grid(const Options& o) {
  const fs::path path = o.config;
  GridConfig g = grid_config_from_json(read_json(path), path.parent_path());
  if (o.seed) g.base.seed.value = *o.seed;
  const fs::path out = o.out;
  write_json(out / "config.json", to_json(g));

  const PreparedData data = prepare_data(g.base.dataset, g.base.window);
  const auto cells = g.cells();
  std::vector<std::optional<RunReport>> reports(cells.size());
  std::vector<std::string> failures(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        reports[i] = run_experiment(cells[i], data);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
      if (!o.quiet) {
        const std::lock_guard lock(log_mutex);
        const auto& c = cells[i];
        if (reports[i]) {
          fmt::print(stderr, "{}/{}: {:.4f}\n", c.test_sensor, to_string(c.variant), reports[i]->pooled_micro_f1);
        } else {
          fmt::print(stderr, "{}/{}: FAILED: {}\n", c.test_sensor, to_string(c.variant), failures[i]);
        }
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(o.workers, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<RunReport> ok;
  json status = json::array();
  json timing = json::object();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string name = fmt::format("{}_{}", cells[i].test_sensor, to_string(cells[i].variant));
    if (reports[i]) {
      write_json(out / "reports" / (name + ".json"), reports[i]->to_json());
      timing[name] = reports[i]->wall_time_s;
      status.push_back({{"cell", name}, {"status", "ok"}});
      ok.push_back(*reports[i]);
    } else {
      status.push_back({{"cell", name}, {"status", "failed"}, {"error", failures[i]}});
    }
  }
  write_json(out / "status.json", status);
  write_json(out / "timing.json", timing);
  if (!ok.empty()) {
    const auto table = compare_runs(ok);
    write_text(out / "comparison.csv", table.to_csv());
    write_text(out / "comparison.txt", table.to_text());
    if (!o.quiet) fmt::print("{}", table.to_text());
  }
  return ok.size() == cells.size() ? kOk : kRuntime;
}

int cmd_inspect(const Options& o) {
  const json j = read_json(o.config);
  const std::string kind = j.value("kind", "");
  if (kind == "pipeline") {
    const Pipeline p = Pipeline::from_json(j);
    fmt::print("pipeline {} for test sensor {}\n", to_string(p.variant), p.test_sensor);
    fmt::print("  classes: {}\n", fmt::join(p.class_set, ", "));
    if (p.representation) {
      fmt::print("  representation: {} groups, d = {}, {} encoding\n", p.representation->groups.size(),
                 p.representation->dim(), to_string(p.representation->mode));
      for (const auto& grp : p.representation->groups) {
        fmt::print("    {}: k = {}, {} inputs, inertia {:.4f}\n", grp.sensor_id, grp.k(), grp.input_dim(),
                   grp.inertia);
      }
    }
    if (p.mapping) {
      fmt::print("  mapping: {} {} -> {}\n", to_string(p.mapping->kind), p.mapping->input_dim(), p.mapping->dim());
    }
    if (p.classifier) {
      fmt::print("  classifier: {} inputs, {} classes\n", p.classifier->num_inputs(), p.classifier->num_classes());
    }
    if (p.ensemble) {
      for (std::size_t s = 0; s < p.ensemble->stages.size(); ++s) {
        fmt::print("  stage {}: error {:.4f}, alpha {:.4f}\n", s, p.ensemble->stages[s].error,
                   p.ensemble->stages[s].alpha);
      }
    }
  } else if (kind == "run_report") {
    const RunReport r = RunReport::from_json(j);
    fmt::print("{} {} on {}: pooled micro-F1 {:.4f}, mean fold {:.4f}\n", to_string(r.config.variant),
               r.config.test_sensor, r.dataset_name, r.pooled_micro_f1, r.mean_fold_micro_f1);
    for (const auto& f : r.folds) {
      fmt::print("  {}: {:.4f} ({} test rows)\n", f.held_out, f.micro_f1, f.test_rows);
    }
    for (std::size_t c = 0; c < r.class_set.size(); ++c) {
      fmt::print("  {}: precision {:.4f}, recall {:.4f}\n", r.class_set[c], r.precision[c], r.recall[c]);
    }
  } else if (kind == "representation") {
    const auto m = RepresentationModel::from_json(j);
    fmt::print("representation: {} groups, d = {}\n", m.groups.size(), m.dim());
  } else if (kind == "mapping") {
    const auto m = MappingModel::from_json(j);
    fmt::print("mapping: {} {} -> {}\n", to_string(m.kind), m.input_dim(), m.dim());
  } else {
    throw ValidationError(fmt::format("{}: unrecognised file kind '{}'", o.config, kind));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xsense: single-sensor activity recognition trained from multi-sensor data"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_out, bool takes_seed, bool takes_workers) {
    sub->add_option("--config", o.config, "Input file (manifest, spec, config or model)")->required();
    if (needs_out) sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    if (takes_seed) sub->add_option("--seed", o.seed, "Override the configured seed");
    if (takes_workers) sub->add_option("--workers", o.workers, "Concurrent grid cells")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", o.quiet, "Suppress progress output");
  };
  auto* validate = app.add_subcommand("validate", "Check a dataset manifest and its files");
  add_common(validate, false, false, false);
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in the canonical CSV layout");
  add_common(synth, true, true, false);
  auto* run = app.add_subcommand("run", "Run one leave-one-subject-out experiment");
  add_common(run, true, true, false);
  auto* grid = app.add_subcommand("grid", "Run a test-sensor x variant grid and compare");
  add_common(grid, true, true, true);
  auto* inspect = app.add_subcommand("inspect", "Summarise a saved model or report");
  add_common(inspect, false, false, false);
  auto* help = app.add_subcommand("help", "Describe every subcommand and flag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*help) {
      // App::help() would describe the selected "help" subcommand itself.
      std::cout << app.get_formatter()->make_help(&app, "xsense", CLI::AppFormatMode::All);
      return kOk;
    }
    if (*validate) return cmd_validate(o);
    if (*synth) return cmd_synth(o);
    if (*run) return cmd_run(o);
    if (*grid) return cmd_grid(o);
    if (*inspect) return cmd_inspect(o);
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntime;
  }
  return kRuntime;
}
