#include <doctest.h>

#include "helpers.hpp"
#include "xsense/core.hpp"

using namespace xsense;
using xsense::test::make_table;

TEST_SUITE("core") {
  TEST_CASE("select_sensor_columns keeps the requested group") {
    auto t = make_table({{"A", 4}, {"B", 4}}, 3);
    for (Eigen::Index c = 0; c < 8; ++c) t.rows.col(c).setConstant(static_cast<double>(c));
    const std::vector<std::string> ids{"A"};
    const auto a = select_sensor_columns(t, ids);
    CHECK(a.num_cols() == 4);
    REQUIRE(a.column_groups.size() == 1);
    CHECK(a.column_groups[0] == ColumnGroup{"A", 0, 4});
    CHECK(a.rows == t.rows.leftCols(4));
  }

  TEST_CASE("selecting every group reproduces the table") {
    auto t = make_table({{"A", 4}, {"B", 4}}, 5);
    std::mt19937_64 rng(3);
    t.rows = test::random_matrix(5, 8, rng);
    const std::vector<std::string> ids{"A", "B"};
    const auto all = select_sensor_columns(t, ids);
    CHECK(all.rows == t.rows);
    CHECK(all.column_groups == t.column_groups);
    CHECK(all.column_names == t.column_names);

    const std::vector<std::string> swapped{"B", "A"};
    const auto s = select_sensor_columns(t, swapped);
    CHECK(s.rows.leftCols(4) == t.rows.rightCols(4));
    CHECK(s.column_groups[0] == ColumnGroup{"B", 0, 4});
  }

  TEST_CASE("selecting an unknown sensor names it and the available ones") {
    const auto t = make_table({{"A", 4}, {"B", 4}}, 2);
    const std::vector<std::string> ids{"C"};
    try {
      select_sensor_columns(t, ids);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("'C'") != std::string::npos);
      CHECK(msg.find("A, B") != std::string::npos);
    }
  }

  TEST_CASE("split_by_subject partitions rows") {
    auto t = make_table({{"A", 2}}, 30);
    for (std::size_t i = 0; i < 30; ++i) {
      t.subject_of_row[i] = fmt::format("s{}", i / 10 + 1);
      t.rows(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    }
    const auto split = split_by_subject(t, "s2");
    CHECK(split.train.num_rows() == 20);
    CHECK(split.test.num_rows() == 10);
    for (const auto& s : split.train.subject_of_row) CHECK(s != "s2");
    for (const auto& s : split.test.subject_of_row) CHECK(s == "s2");
    // Order within each part follows the input.
    CHECK(split.train.rows(9, 0) == 9.0);
    CHECK(split.train.rows(10, 0) == 20.0);
    CHECK(split.test.rows(0, 0) == 10.0);
  }

  TEST_CASE("holding out the only subject leaves an empty train part") {
    const auto t = make_table({{"A", 2}}, 4);
    const auto split = split_by_subject(t, "s1");
    CHECK(split.train.num_rows() == 0);
    CHECK(split.test.num_rows() == 4);
  }

  TEST_CASE("holding out an absent subject is an error") {
    const auto t = make_table({{"A", 2}}, 4);
    CHECK_THROWS_AS(split_by_subject(t, "s9"), ValidationError);
  }

  TEST_CASE("group lookup and subject listing") {
    auto t = make_table({{"A", 2}, {"B", 3}}, 4);
    t.subject_of_row = {"x", "x", "y", "y"};
    CHECK(t.has_group("B"));
    CHECK_FALSE(t.has_group("C"));
    CHECK(t.group("B").size() == 3);
    CHECK_THROWS_AS(t.group("C"), ValidationError);
    CHECK(t.sensor_ids() == std::vector<std::string>{"A", "B"});
    CHECK(t.subjects() == std::vector<std::string>{"x", "y"});
  }

  TEST_CASE("labeled_part drops unlabeled rows") {
    auto t = make_table({{"A", 1}}, 4);
    t.label_of_row = {0, kUnlabeled, 1, kUnlabeled};
    const auto lab = labeled_part(t);
    CHECK(lab.num_rows() == 2);
    CHECK(lab.label_of_row == std::vector<ClassIndex>{0, 1});
  }

  TEST_CASE("check_table catches broken invariants") {
    auto t = make_table({{"A", 2}}, 3);
    CHECK_NOTHROW(check_table(t));
    auto bad_label = t;
    bad_label.label_of_row[1] = 7;
    CHECK_THROWS_AS(check_table(bad_label), ValidationError);
    auto interleaved = t;
    interleaved.subject_of_row = {"a", "b", "a"};
    CHECK_THROWS_AS(check_table(interleaved), ValidationError);
    auto nan = t;
    nan.rows(0, 0) = std::nan("");
    CHECK_THROWS_AS(check_table(nan), ValidationError);
  }

  TEST_CASE("dataset diagnostics") {
    auto ds = test::tiny_dataset();
    CHECK(dataset_diagnostics(ds).empty());

    SUBCASE("interval outside the recording") {
      ds.labels["s1"].push_back({100.0, 120.0, "sit"});
      const auto d = dataset_diagnostics(ds);
      REQUIRE(d.size() == 1);
      CHECK(d[0].find("s1") != std::string::npos);
      CHECK(d[0].find("[100, 120)") != std::string::npos);
    }
    SUBCASE("overlapping intervals") {
      ds.labels["s1"][0].end = 60.0;
      CHECK(dataset_diagnostics(ds).front().find("overlap") != std::string::npos);
    }
    SUBCASE("unknown activity") {
      ds.labels["s1"][0].activity = "run";
      CHECK_THROWS_AS(check_dataset(ds), ValidationError);
    }
    SUBCASE("timestamps must increase") {
      auto& ch = ds.channels.begin()->second;
      std::swap(ch.samples[3], ch.samples[4]);
      CHECK(dataset_diagnostics(ds).front().find("strictly increasing") != std::string::npos);
    }
  }

  TEST_CASE("channel span includes the last sample period") {
    SensorChannel c{"s", "x", 4.0, {{1.0, 0.0, true}, {1.25, 0.0, true}}};
    CHECK(c.begin_time() == 1.0);
    CHECK(c.end_time() == doctest::Approx(1.5));
  }

  TEST_CASE("quality tier parsing") {
    CHECK(parse_quality_tier("low") == QualityTier::low);
    CHECK(to_string(QualityTier::high) == "high");
    CHECK_THROWS_AS(parse_quality_tier("medium"), ValidationError);
  }
}
