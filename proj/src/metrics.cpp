#include "hvs/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hvs {

std::vector<double> RunLog::sad_series() const {
  std::vector<double> s;
  s.reserve(records.size());
  for (const auto& r : records) s.push_back(r.sad);
  return s;
}

std::optional<int> convergence_iteration(std::span<const double> series, double threshold) {
  if (series.empty()) throw std::invalid_argument("convergence_iteration: empty series");
  std::size_t t = series.size();
  while (t > 0 && series[t - 1] <= threshold) --t;
  if (t == series.size()) return std::nullopt;
  return static_cast<int>(t) + 1;
}

Smoothness smoothness(std::span<const double> series) {
  if (series.size() < 2) throw std::invalid_argument("smoothness: need at least two samples");
  const double n = static_cast<double>(series.size());
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  Smoothness s;
  s.std = std::sqrt(var / n);
  for (std::size_t i = 1; i < series.size(); ++i) s.tpl += std::abs(series[i] - series[i - 1]);
  return s;
}

RunSummary summarize(const RunLog& log, double threshold) {
  if (log.records.size() < 2) throw IncompleteLogError("summarize: log needs at least two records");
  std::vector<double> sad, dq1, dq2;
  double wall = 0.0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const RunRecord& r = log.records[i];
    if (r.iter != static_cast<int>(i) + 1) throw IncompleteLogError("summarize: iterations are not contiguous from 1");
    sad.push_back(r.sad);
    dq1.push_back(r.dq1_mm);
    dq2.push_back(r.dq2_mm);
    wall += r.wall_ms;
  }
  RunSummary s;
  s.controller = log.controller;
  s.convergence_iteration = convergence_iteration(sad, threshold);
  s.task_completed = s.convergence_iteration.has_value();
  s.mean_iteration_time_s = wall / static_cast<double>(log.records.size()) / 1000.0;
  s.final_sad = sad.back();
  const Smoothness s1 = smoothness(dq1);
  const Smoothness s2 = smoothness(dq2);
  s.std = {s1.std, s2.std};
  s.tpl = {s1.tpl, s2.tpl};
  return s;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("csv: bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_run_csv(const std::filesystem::path& path, const RunLog& log, bool with_wall_time) {
  auto out = open_out(path);
  out << kRunCsvHeader << '\n';
  for (const auto& r : log.records) {
    out << r.iter << ',' << to_string(r.mode) << ',' << format_double(r.q1_mm) << ',' << format_double(r.q2_mm) << ','
        << format_double(r.dq1_mm) << ',' << format_double(r.dq2_mm) << ',' << format_double(r.sad) << ','
        << (r.features_visible ? 1 : 0) << ',' << format_double(with_wall_time ? r.wall_ms : 0.0) << '\n';
  }
}

RunLog read_run_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != kRunCsvHeader) throw std::runtime_error("read_run_csv: unexpected header in " + path.string());
  RunLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 9) throw std::runtime_error("read_run_csv: expected 9 columns: '" + line + "'");
    RunRecord r;
    r.iter = parse_int(c[0]);
    r.mode = parse_mode(c[1]);
    r.q1_mm = parse_double(c[2]);
    r.q2_mm = parse_double(c[3]);
    r.dq1_mm = parse_double(c[4]);
    r.dq2_mm = parse_double(c[5]);
    r.sad = parse_double(c[6]);
    r.features_visible = parse_int(c[7]) != 0;
    r.wall_ms = parse_double(c[8]);
    log.records.push_back(r);
  }
  return log;
}

void write_timing_csv(const std::filesystem::path& path, const RunLog& log) {
  auto out = open_out(path);
  out << "iter,wall_ms\n";
  for (const auto& r : log.records) out << r.iter << ',' << format_double(r.wall_ms) << '\n';
}

void merge_timing_csv(const std::filesystem::path& path, RunLog& log) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != "iter,wall_ms") throw std::runtime_error("merge_timing_csv: unexpected header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 2) throw std::runtime_error("merge_timing_csv: malformed row '" + line + "'");
    const int iter = parse_int(c[0]);
    if (iter < 1 || static_cast<std::size_t>(iter) > log.records.size()) {
      throw std::runtime_error("merge_timing_csv: iteration out of range");
    }
    log.records[iter - 1].wall_ms = parse_double(c[1]);
  }
}

void write_metadata(const std::filesystem::path& path, const RunLog& log) {
  auto out = open_out(path);
  out << "controller = " << log.controller << '\n';
  for (const auto& [k, v] : log.metadata) out << k << " = " << v << '\n';
}

void write_summary_csv(const std::filesystem::path& path, std::span<const RunSummary> rows) {
  auto out = open_out(path);
  out << "controller,task_completed,iteration_time_s,convergence_iteration,final_sad,std_dq1,std_dq2,tpl_dq1,tpl_dq2\n";
  for (const auto& s : rows) {
    out << s.controller << ',' << (s.task_completed ? "yes" : "no") << ',' << format_double(s.mean_iteration_time_s)
        << ',' << (s.convergence_iteration ? std::to_string(*s.convergence_iteration) : std::string("none")) << ','
        << format_double(s.final_sad) << ',' << format_double(s.std[0]) << ',' << format_double(s.std[1]) << ','
        << format_double(s.tpl[0]) << ',' << format_double(s.tpl[1]) << '\n';
  }
}

std::vector<RunSummary> read_summary_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<RunSummary> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 9) throw std::runtime_error("read_summary_csv: expected 9 columns");
    RunSummary s;
    s.controller = c[0];
    s.task_completed = c[1] == "yes";
    s.mean_iteration_time_s = parse_double(c[2]);
    if (c[3] != "none") s.convergence_iteration = parse_int(c[3]);
    s.final_sad = parse_double(c[4]);
    s.std = {parse_double(c[5]), parse_double(c[6])};
    s.tpl = {parse_double(c[7]), parse_double(c[8])};
    rows.push_back(s);
  }
  return rows;
}

}  // namespace hvs
