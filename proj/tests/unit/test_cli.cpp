#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace xsense;
using nlohmann::json;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2>&1", XSENSE_CLI_PATH, args, log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

json small_spec() {
  return {{"n_subjects", 2},
          {"n_sensors", 2},
          {"n_actions", 3},
          {"activities", {{{"label", "A"}, {"actions", {0, 1}}}, {{"label", "B"}, {"actions", {0, 2}}}}},
          {"observability", {{1, 0.2, 0.2}, {0.2, 1, 1}}},
          {"noise_std", 0.3},
          {"samples_per_action", 50},
          {"repetitions", 2},
          {"seed", 5}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validate") {
    test::TempDir dir;
    const fs::path log = dir.path() / "log.txt";
    write(dir.path() / "spec.json", small_spec().dump());
    REQUIRE(run_cli(fmt::format("synth --config \"{}\" --out \"{}\" --quiet", (dir.path() / "spec.json").string(),
                                (dir.path() / "data").string()),
                    log) == 0);
    const fs::path manifest = dir.path() / "data" / "manifest.json";
    CHECK(run_cli(fmt::format("validate --config \"{}\"", manifest.string()), log) == 0);
    CHECK(slurp(log) == "OK\n");

    SUBCASE("label outside the recording") {
      std::ofstream(dir.path() / "data" / "labels.csv", std::ios::app) << "subject01,99990,99999,A\n";
      CHECK(run_cli(fmt::format("validate --config \"{}\"", manifest.string()), log) == 1);
      CHECK(slurp(log).find("subject01") != std::string::npos);
    }
    SUBCASE("missing label file") {
      fs::remove(dir.path() / "data" / "labels.csv");
      CHECK(run_cli(fmt::format("validate --config \"{}\"", manifest.string()), log) == 1);
      CHECK(slurp(log).find("labels.csv: file not found") != std::string::npos);
    }
  }

  TEST_CASE("grid writes one report per cell and a comparison") {
    test::TempDir dir;
    const fs::path log = dir.path() / "log.txt";
    json grid = {{"dataset", {{"synthetic", small_spec()}}},
                 {"window", {{"length_s", 1.0}, {"step_s", 1.0}}},
                 {"test_sensors", {"S1", "S2"}},
                 {"kmeans_restarts", 2}};
    write(dir.path() / "grid.json", grid.dump());
    const auto out = dir.path() / "out";
    const std::string args = fmt::format("grid --config \"{}\" --out \"{}\" --workers 3 --quiet",
                                         (dir.path() / "grid.json").string(), out.string());
    REQUIRE(run_cli(args, log) == 0);
    std::size_t reports = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(out / "reports")) ++reports;
    CHECK(reports == 12);
    const std::string csv = slurp(out / "comparison.csv");
    CHECK(csv.rfind("test_sensor,Trad,Clusters,LinR,LogR,LinB,LogB,best,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(fs::exists(out / "comparison.txt"));

    const std::string first = slurp(out / "reports" / "S2_LogB.json");
    REQUIRE(run_cli(args, log) == 0);
    CHECK(slurp(out / "reports" / "S2_LogB.json") == first);
    CHECK(slurp(out / "comparison.csv") == csv);

    SUBCASE("single variant") {
      grid["variants"] = {"Trad"};
      write(dir.path() / "grid.json", grid.dump());
      const auto out2 = dir.path() / "out2";
      REQUIRE(run_cli(fmt::format("grid --config \"{}\" --out \"{}\" --quiet", (dir.path() / "grid.json").string(),
                                  out2.string()),
                      log) == 0);
      std::size_t n = 0;
      for ([[maybe_unused]] const auto& e : fs::directory_iterator(out2 / "reports")) ++n;
      CHECK(n == 2);
    }
  }

  TEST_CASE("run, then inspect the saved model") {
    test::TempDir dir;
    const fs::path log = dir.path() / "log.txt";
    json cfg = {{"dataset", {{"synthetic", small_spec()}}},
                {"window", {{"length_s", 1.0}, {"step_s", 1.0}}},
                {"test_sensor", "S1"},
                {"variant", "LinB"}};
    write(dir.path() / "run.json", cfg.dump());
    const auto out = dir.path() / "out";
    REQUIRE(run_cli(fmt::format("run --config \"{}\" --out \"{}\" --seed 3", (dir.path() / "run.json").string(),
                                out.string()),
                    log) == 0);
    CHECK(json::parse(slurp(out / "config.json"))["seed"] == 3);
    CHECK(run_cli(fmt::format("inspect --config \"{}\"", (out / "model.json").string()), log) == 0);
    CHECK(slurp(log).find("stage 1") != std::string::npos);
    CHECK(run_cli(fmt::format("inspect --config \"{}\"", (out / "report.json").string()), log) == 0);
  }

  TEST_CASE("usage errors") {
    test::TempDir dir;
    const fs::path log = dir.path() / "log.txt";
    CHECK(run_cli("grid --config x.json --bogus", log) == 1);
    CHECK(run_cli("", log) == 1);
    CHECK(run_cli(fmt::format("run --config \"{}\"", (dir.path() / "absent.json").string()), log) == 1);
    write(dir.path() / "bad.json", "{\"variant\": \"Trad\", \"extra\": 1}");
    CHECK(run_cli(fmt::format("run --config \"{}\"", (dir.path() / "bad.json").string()), log) == 1);
    CHECK(run_cli("help", log) == 0);
    const std::string help = slurp(log);
    for (const char* flag : {"--config", "--out", "--seed", "--workers", "--quiet", "validate", "synth", "run", "grid",
                             "inspect"}) {
      CHECK(help.find(flag) != std::string::npos);
    }
  }
}
