#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hvs/disturbance.hpp"
#include "hvs/hvs.hpp"
#include "hvs/metrics.hpp"
#include "hvs/policy.hpp"
#include "hvs/training.hpp"

namespace hvs {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Every tunable of the simulation, loaded from a flat `key = value` file.
struct Settings {
  RobotParams robot;

  int image_width = 128;
  int image_height = 128;
  double fov_deg = 110.0;
  double assumed_depth_mm = 1000.0;

  double board_distance_mm = 1500.0;
  double marker_half_spacing_mm = 150.0;
  double marker_radius_mm = 60.0;
  BoardTexture texture;

  int policy_size = 64;
  IbvsGains ibvs;
  DlbvsGains dlbvs;
  HvsConfig hvs;
  DatasetSpec dataset;
  TrainConfig train;
  std::string model_path;

  DisturbanceScript disturbances;
  int frame_every = 0;
  bool record_wall_time = false;
  /// Tendon values combined pairwise into the calibration start grid.
  std::vector<double> calibration_values = {-6.0, -3.0, 0.0, 3.0, 6.0};

  Scene scene() const;
  CameraParams camera() const;
  std::vector<TendonState> calibration_grid() const;
  void validate() const;

  /// Key/value snapshot in canonical order; parse_settings accepts it back.
  std::vector<std::pair<std::string, std::string>> snapshot() const;
};

/// Unknown keys, malformed values and duplicate keys raise ConfigError.
/// A relative model_path is resolved against `base_dir`.
Settings parse_settings(std::string_view text, const std::filesystem::path& base_dir = {});
Settings load_settings(const std::filesystem::path& path);
std::vector<std::string> settings_keys();

/// "s-e:x,y,w,h;..." / "s-e:gain;..." / "iter:dq1,dq2;..."
std::vector<OcclusionWindow> parse_occlusions(std::string_view text);
std::vector<LightingWindow> parse_lighting(std::string_view text);
std::vector<Impulse> parse_impulses(std::string_view text);
TendonState parse_tendon_pair(std::string_view text);

enum class ControllerKind { IBVS, DLBVS, HVS };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller(std::string_view text);

struct ScenarioConfig {
  std::string name = "scenario";
  TendonState start;
  ControllerKind controller = ControllerKind::HVS;
  Settings settings;
  /// Empty: nothing is written.
  std::filesystem::path out_dir;
};

struct ScenarioSuite {
  std::vector<ScenarioConfig> scenarios;

  void validate() const;
};

/// Scene, camera, gains and the policy bound together for one run. The
/// context points at the owned scene, so the object stays in place.
struct Environment {
  Environment(const Settings& s, const PolicyModel* model);
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  Scene scene;
  ServoContext ctx;
  ServoTarget target;
};

/// Closed loop for max_iterations. Each iteration applies actuator noise and
/// impulses, renders, applies lighting then occluders, runs the controller
/// and integrates dq. `model` may be null, in which case DLBVS/HVS load
/// settings.model_path. When out_dir is set, run.csv, timing.csv,
/// metadata.txt and frames are written there.
RunLog run_scenario(const ScenarioConfig& cfg, const PolicyModel* model = nullptr);

struct ComparisonResult {
  RunLog hvs;
  RunLog dlbvs;
  RunSummary hvs_summary;
  RunSummary dlbvs_summary;
};

/// HVS and DLBVS from the same start and seeds; writes hvs/, dlbvs/ and
/// summary.csv under out_dir when set.
ComparisonResult run_comparison(TendonState start, const Settings& settings, const PolicyModel* model = nullptr,
                                const std::filesystem::path& out_dir = {});

/// sad.svg, q.svg, dq.svg, mode.svg
void emit_plots(const RunLog& log, const std::filesystem::path& out_dir, double convergence_sad = 0.06);

/// frame_NNN.ppm
std::string frame_filename(int iteration);

/// Reloads a persisted run (merging timing.csv when present), writes
/// summary.csv and the plots next to it. The controller name and
/// convergence threshold come from metadata.txt when it exists.
RunSummary report_run(const std::filesystem::path& run_dir);

}  // namespace hvs
