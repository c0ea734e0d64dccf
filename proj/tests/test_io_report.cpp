#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "rarerate/ci.hpp"
#include "rarerate/error.hpp"
#include "rarerate/io.hpp"
#include "rarerate/report.hpp"

using namespace rarerate;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

const std::string kData = std::string(RARERATE_SOURCE_DIR) + "/data/";

}  // namespace

TEST_CASE("CSV line splitting") {
  CHECK(io::split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(io::split_csv_line("\"x,y\",\"q\"\"\"") == std::vector<std::string>{"x,y", "q\""});
  CHECK(io::split_csv_line("1.5,A\r") == std::vector<std::string>{"1.5", "A"});
}

TEST_CASE("weights file round trip") {
  const auto s = fixtures::case_study_union();
  std::stringstream ss;
  io::write_weights_csv(ss, s);
  const auto back = io::parse_weights_csv(ss);
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(back.weights()[i] == s.weights()[i]);
    CHECK(back.categories()[i] == s.categories()[i]);
  }
}

TEST_CASE("bundled fixtures load") {
  const auto a5 = io::read_weights_csv(kData + "a5.csv");
  CHECK(a5.size() == 39);
  CHECK(a5.total() == doctest::Approx(615.38));
  CHECK(a5.subset("A").total() == doctest::Approx(230.69));
  const auto t1 = io::read_weights_csv(kData + "table1.csv");
  CHECK(t1.size() == 101);
  CHECK(io::read_weights_csv(kData + "empty.csv").empty());
}

TEST_CASE("estimating from a file equals the in-memory call") {
  const auto file = io::read_weights_csv(kData + "a5.csv");
  const auto mem = fixtures::case_study_union();
  CiConfig cfg;
  cfg.method = CiMethod::EB;
  cfg.backend = Backend::MonteCarlo;
  cfg.next_weight = NextWeightSpec::fixed(72.75);
  const auto a = compute_ci(file.subset("A"), cfg);
  const auto b = compute_ci(mem.subset("A"), cfg);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("weights file errors") {
  std::stringstream bad_header("w,category\n1,A\n");
  CHECK(code_of([&] { io::parse_weights_csv(bad_header); }) == ErrorCode::MalformedInput);
  std::stringstream bad_number("weight,category\nabc,A\n");
  CHECK(code_of([&] { io::parse_weights_csv(bad_number); }) == ErrorCode::MalformedInput);
  std::stringstream negative("weight,category\n-1,A\n");
  CHECK(code_of([&] { io::parse_weights_csv(negative); }) == ErrorCode::NonPositiveWeight);
  std::stringstream nothing("");
  CHECK(code_of([&] { io::parse_weights_csv(nothing); }) == ErrorCode::MalformedInput);
  std::stringstream no_category("weight\n2\n3\n");
  CHECK(io::parse_weights_csv(no_category).size() == 2);
  CHECK(code_of([] { io::read_weights_csv("/nonexistent/file.csv"); }) == ErrorCode::IoError);
}

TEST_CASE("segments file round trip and validation") {
  SegmentRecord a;
  a.segment_id = "s1";
  a.s_prob = 0.5;
  a.h_prob = 0.4;
  a.p_prob = 0.2;
  a.simulated = true;
  a.reviewed = true;
  a.outcome = true;
  SegmentRecord b;
  b.segment_id = "s2";
  b.s_prob = 0.25;
  b.p_prob = 0.1;
  const std::vector<SegmentRecord> recs{a, b};
  std::stringstream ss;
  io::write_segments_csv(ss, recs);
  const auto back = io::parse_segments_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].h_prob == 0.4);
  CHECK(back[0].outcome == true);
  CHECK(!back[1].h_prob);
  CHECK(!back[1].outcome);
  CHECK(!back[1].simulated);

  std::stringstream inconsistent(
      "segment_id,s_prob,h_prob,p_prob,simulated,reviewed,outcome\nx,0.5,0.5,0.5,1,1,1\n");
  CHECK(code_of([&] { io::parse_segments_csv(inconsistent); }) == ErrorCode::InvalidRecord);
  std::stringstream bad_flag("segment_id,s_prob,h_prob,p_prob,simulated,reviewed,outcome\nx,1,0.5,0.5,2,0,\n");
  CHECK(code_of([&] { io::parse_segments_csv(bad_flag); }) == ErrorCode::MalformedInput);
}

TEST_CASE("scenario config parsing") {
  const auto cells = io::parse_scenario_config(R"({
    "lambda": 1000, "pi": 0.01, "gamma": [0, 0.5],
    "budget": {"from": 0.01, "to": 0.05, "steps": 5},
    "methods": ["pb", "eb2m"], "gamma_hat": 0.5, "replicates": 3, "base_seed": 9
  })");
  REQUIRE(cells.size() == 10);
  CHECK(cells[0].sampling.gamma == 0.0);
  CHECK(cells[5].sampling.gamma == 0.5);
  CHECK(cells[4].budget == doctest::Approx(0.05));
  CHECK(cells[1].budget == doctest::Approx(0.02));
  CHECK(!cells[0].gamma_hat.oracle);
  CHECK(cells[0].methods.size() == 2);
  CHECK(cells[0].base_seed == 9);

  const auto ts = io::parse_scenario_config(
      R"({"two_stage": {"b1": 0.1, "gamma1": 0.25, "gamma2": 0.25}, "budget": 0.2, "methods": ["eb2m"]})");
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].two_stage->b1 == 0.1);

  for (const char* bad : {R"({"methods": ["pb"], "bogus": 1})", R"({"methods": ["zz"]})", R"({"lambda": 1})",
                          R"({"methods": ["pb"], "budget": "x"})", R"({"methods": ["pb"], "f1": {"mu": 1}})",
                          R"([1, 2])", "{not json"}) {
    INFO(bad);
    CHECK(code_of([&] { io::parse_scenario_config(bad); }) == ErrorCode::ConfigError);
  }
}

TEST_CASE("bundled configs parse") {
  for (const char* name : {"smoke.json", "uniform.json", "two_stage.json", "importance_grid.json"}) {
    INFO(name);
    CHECK_FALSE(io::load_scenario_config(std::string(RARERATE_SOURCE_DIR) + "/configs/" + name).empty());
  }
}

TEST_CASE("coverage CSV round trip") {
  CoverageReport rep;
  rep.rows.push_back({0, 0.01, "0.5", "PB", 0.4, 70.5, 100, 99.5, 0});
  rep.rows.push_back({0, 0.01, "0.5", "EB2m", 0.1, 120.25, 100, 99.5, 2});
  std::stringstream ss;
  io::write_coverage_csv(ss, rep);
  const auto rows = io::parse_coverage_csv(ss);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].method == "EB2m");
  CHECK(rows[1].mean_width == 120.25);
  CHECK(rows[1].failures == 2);
  std::stringstream bad("budget,gamma\n");
  CHECK(code_of([&] { io::parse_coverage_csv(bad); }) == ErrorCode::MalformedInput);
}

TEST_CASE("report rendering") {
  std::vector<CoverageRow> rows{{0, 0.01, "0.5", "PB", 0.4, 70, 100, 0, 0},
                                {0, 0.01, "0.5", "EB2m", 0.1, 120, 100, 0, 0},
                                {1, 0.05, "0.5", "PB", 0.2, 40, 100, 0, 0},
                                {1, 0.05, "0.5", "EB2m", 0.09, 60, 100, 0, 0},
                                {2, 0.05, "0.9", "PB", 0.5, 30, 100, 0, 0}};
  const auto pivot = report::pivot_csv(rows, "0.5");
  CHECK(pivot.find("budget,PB_coverage_error,EB2m_coverage_error,PB_mean_width,EB2m_mean_width") == 0);
  CHECK(pivot.find("0.05,0.2,0.09,40,60") != std::string::npos);
  const auto svg = report::render_svg(rows, "0.5");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  std::size_t charts = 0;
  for (auto pos = svg.find("class=\"chart\""); pos != std::string::npos; pos = svg.find("class=\"chart\"", pos + 1)) {
    ++charts;
  }
  CHECK(charts == 2);
  CHECK(svg.find("<polyline") != std::string::npos);

  // A single cell still renders as points.
  const std::vector<CoverageRow> one{rows[4]};
  const auto single = report::render_svg(one, "0.9");
  CHECK(single.find("<circle") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "rarerate_report_test";
  std::filesystem::create_directories(dir);
  const auto files = report::write_report(rows, (dir / "out").string());
  CHECK(files.size() == 4);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  CHECK(code_of([&] { report::write_report(std::vector<CoverageRow>{}, (dir / "x").string()); }) ==
        ErrorCode::NoRows);
}
