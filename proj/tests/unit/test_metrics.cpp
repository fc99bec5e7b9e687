#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hvs/metrics.hpp"

using namespace hvs;

namespace {

RunLog make_log(std::initializer_list<double> sads) {
  RunLog log;
  log.controller = "hvs";
  int i = 0;
  for (double s : sads) {
    RunRecord r;
    r.iter = ++i;
    r.mode = i % 2 ? ControllerMode::DLBVS : ControllerMode::IBVS;
    r.q1_mm = 0.1 * i;
    r.q2_mm = -1.0 / 3.0 * i;
    r.dq1_mm = i == 2 ? 1.0 : 0.0;
    r.dq2_mm = 0.25;
    r.sad = s;
    r.features_visible = i != 1;
    r.wall_ms = 0.5 + i;
    log.records.push_back(r);
  }
  return log;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hvs_unit_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("convergence iteration") {
  const double a[] = {0.2, 0.15, 0.05, 0.04, 0.03};
  CHECK(convergence_iteration(a, 0.06) == 3);
  const double b[] = {0.05, 0.07, 0.04, 0.04};
  CHECK(convergence_iteration(b, 0.06) == 3);
  const double c[] = {0.05, 0.04, 0.07};
  CHECK_FALSE(convergence_iteration(c, 0.06).has_value());
  const double d[] = {0.01};
  CHECK(convergence_iteration(d, 0.06) == 1);
  const double e[] = {0.06, 0.06};
  CHECK(convergence_iteration(e, 0.06) == 1);
  CHECK_THROWS(convergence_iteration(std::span<const double>{}, 0.06));
}

TEST_CASE("smoothness") {
  const double a[] = {0.0, 1.0, 0.0};
  const Smoothness s = smoothness(a);
  CHECK(s.tpl == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(0.4714).epsilon(1e-4));
  const double flat[] = {3.0, 3.0, 3.0};
  CHECK(smoothness(flat).std == 0.0);
  CHECK(smoothness(flat).tpl == 0.0);
}

TEST_CASE("summary of a log") {
  const RunLog log = make_log({0.3, 0.2, 0.05, 0.04});
  const RunSummary s = summarize(log);
  CHECK(s.controller == "hvs");
  CHECK(s.task_completed);
  CHECK(s.convergence_iteration == 3);
  CHECK(s.final_sad == 0.04);
  CHECK(s.mean_iteration_time_s == doctest::Approx(3.0e-3));
  CHECK(s.tpl[0] == doctest::Approx(2.0));
  CHECK(s.tpl[1] == doctest::Approx(0.0));

  CHECK_FALSE(summarize(make_log({0.3, 0.2})).task_completed);
  CHECK_THROWS_AS(summarize(make_log({0.3})), IncompleteLogError);
  RunLog gap = make_log({0.3, 0.2, 0.1});
  gap.records[2].iter = 5;
  CHECK_THROWS_AS(summarize(gap), IncompleteLogError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("run.csv roundtrip and wall-time column") {
  const auto dir = scratch("runcsv");
  const RunLog log = make_log({0.3, 0.2, 0.05});
  write_run_csv(dir / "run.csv", log, false);
  {
    std::ifstream in(dir / "run.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == kRunCsvHeader);
  }
  RunLog back = read_run_csv(dir / "run.csv");
  REQUIRE(back.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    RunRecord expect = log.records[i];
    expect.wall_ms = 0.0;
    CHECK(back.records[i] == expect);
  }
  write_timing_csv(dir / "timing.csv", log);
  merge_timing_csv(dir / "timing.csv", back);
  CHECK(back.records[2].wall_ms == log.records[2].wall_ms);

  write_run_csv(dir / "timed.csv", log, true);
  CHECK(read_run_csv(dir / "timed.csv").records[1] == log.records[1]);

  std::ofstream(dir / "bad.csv") << "iter,mode\n1,IBVS\n";
  CHECK_THROWS(read_run_csv(dir / "bad.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary.csv roundtrip") {
  const auto dir = scratch("summary");
  RunSummary a = summarize(make_log({0.3, 0.2, 0.05}));
  RunSummary b = summarize(make_log({0.3, 0.2, 0.15}));
  b.controller = "dlbvs";
  const RunSummary rows[] = {a, b};
  write_summary_csv(dir / "summary.csv", rows);
  const auto back = read_summary_csv(dir / "summary.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK_FALSE(back[1].convergence_iteration.has_value());
  std::filesystem::remove_all(dir);
}
