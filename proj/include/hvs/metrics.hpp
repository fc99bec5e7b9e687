#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hvs/hvs.hpp"

namespace hvs {

struct RunRecord {
  int iter = 0;
  ControllerMode mode = ControllerMode::DLBVS;
  double q1_mm = 0.0;
  double q2_mm = 0.0;
  double dq1_mm = 0.0;
  double dq2_mm = 0.0;
  double sad = 0.0;
  bool features_visible = false;
  double wall_ms = 0.0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunLog {
  std::string controller;
  /// Ordered key/value snapshot of the run configuration and seeds.
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<RunRecord> records;

  std::vector<double> sad_series() const;
};

class IncompleteLogError : public std::runtime_error {
 public:
  explicit IncompleteLogError(const std::string& what) : std::runtime_error(what) {}
};

/// 1-based index t with series[i] <= threshold for every i >= t.
std::optional<int> convergence_iteration(std::span<const double> series, double threshold = 0.06);

struct Smoothness {
  double std = 0.0;
  double tpl = 0.0;
};

/// Population standard deviation and path length sum |x_t - x_{t-1}|.
Smoothness smoothness(std::span<const double> series);

struct RunSummary {
  std::string controller;
  bool task_completed = false;
  double mean_iteration_time_s = 0.0;
  std::optional<int> convergence_iteration;
  double final_sad = 0.0;
  std::array<double, 2> std{};
  std::array<double, 2> tpl{};

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

/// Throws IncompleteLogError for logs with fewer than two records or
/// non-contiguous iteration numbers.
RunSummary summarize(const RunLog& log, double threshold = 0.06);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

inline constexpr const char* kRunCsvHeader = "iter,mode,q1_mm,q2_mm,dq1_mm,dq2_mm,sad,features_visible,wall_ms";

/// run.csv; wall_ms is written as 0 unless `with_wall_time` is set.
void write_run_csv(const std::filesystem::path& path, const RunLog& log, bool with_wall_time);
RunLog read_run_csv(const std::filesystem::path& path);

/// timing.csv: iter,wall_ms
void write_timing_csv(const std::filesystem::path& path, const RunLog& log);
/// Copies wall_ms from timing.csv into matching records.
void merge_timing_csv(const std::filesystem::path& path, RunLog& log);

void write_metadata(const std::filesystem::path& path, const RunLog& log);

void write_summary_csv(const std::filesystem::path& path, std::span<const RunSummary> rows);
std::vector<RunSummary> read_summary_csv(const std::filesystem::path& path);

}  // namespace hvs
