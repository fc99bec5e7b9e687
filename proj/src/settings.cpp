#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hvs/harness.hpp"

namespace hvs {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return v;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s) { return static_cast<int>(to_integer(s)); }

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("expected an unsigned integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true/false, got '" + s + "'");
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto parts = split(s, '-');
  if (parts.size() != 2) throw ConfigError("expected an iteration range 'start-end', got '" + s + "'");
  return {to_int(parts[0]), to_int(parts[1])};
}

std::string fmt(double v) { return format_double(v); }

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

struct KeyDef {
  const char* name;
  std::function<void(Settings&, const std::string&)> set;
  std::function<std::string(const Settings&)> get;
};

#define HVS_DOUBLE(key, field) \
  KeyDef { key, [](Settings& s, const std::string& v) { s.field = to_double(v); }, [](const Settings& s) { return fmt(s.field); } }
#define HVS_INT(key, field) \
  KeyDef { key, [](Settings& s, const std::string& v) { s.field = to_int(v); }, [](const Settings& s) { return std::to_string(s.field); } }
#define HVS_U64(key, field) \
  KeyDef { key, [](Settings& s, const std::string& v) { s.field = to_u64(v); }, [](const Settings& s) { return std::to_string(s.field); } }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      HVS_DOUBLE("backbone_length_mm", robot.backbone_length_mm),
      HVS_DOUBLE("tendon_pitch_radius_mm", robot.tendon_pitch_radius_mm),
      HVS_DOUBLE("fd_delta_mm", ibvs.fd_delta_mm),
      HVS_INT("image_width", image_width),
      HVS_INT("image_height", image_height),
      HVS_DOUBLE("fov_deg", fov_deg),
      HVS_DOUBLE("assumed_depth_mm", assumed_depth_mm),
      HVS_DOUBLE("board_distance_mm", board_distance_mm),
      HVS_DOUBLE("marker_half_spacing_mm", marker_half_spacing_mm),
      HVS_DOUBLE("marker_radius_mm", marker_radius_mm),
      HVS_U64("texture_seed", texture.seed),
      HVS_DOUBLE("texture_coarse_mm", texture.coarse_scale_mm),
      HVS_DOUBLE("texture_fine_mm", texture.fine_scale_mm),
      HVS_DOUBLE("texture_fine_weight", texture.fine_weight),
      HVS_INT("policy_size", policy_size),
      HVS_DOUBLE("ibvs_lambda", ibvs.lambda),
      {"h_convention",
       [](Settings& s, const std::string& v) {
         if (v == "camera_from_base") {
           s.ibvs.h_convention = HConvention::CameraFromBase;
         } else if (v == "base_from_camera") {
           s.ibvs.h_convention = HConvention::BaseFromCamera;
         } else {
           throw ConfigError("h_convention must be camera_from_base or base_from_camera");
         }
       },
       [](const Settings& s) {
         return std::string(s.ibvs.h_convention == HConvention::CameraFromBase ? "camera_from_base"
                                                                                : "base_from_camera");
       }},
      {"interaction_model",
       [](Settings& s, const std::string& v) {
         if (v == "camera_twist") {
           s.ibvs.point_model = PointModel::CameraTwist;
         } else if (v == "literal") {
           s.ibvs.point_model = PointModel::Literal;
         } else {
           throw ConfigError("interaction_model must be camera_twist or literal");
         }
       },
       [](const Settings& s) {
         return std::string(s.ibvs.point_model == PointModel::CameraTwist ? "camera_twist" : "literal");
       }},
      HVS_DOUBLE("dlbvs_alpha", dlbvs.alpha),
      {"label_units",
       [](Settings& s, const std::string& v) {
         if (v == "m") {
           s.dlbvs.label_units = LabelUnits::Metres;
         } else if (v == "mm") {
           s.dlbvs.label_units = LabelUnits::Millimetres;
         } else {
           throw ConfigError("label_units must be m or mm");
         }
         s.dataset.label_units = s.dlbvs.label_units;
       },
       [](const Settings& s) { return std::string(s.dlbvs.label_units == LabelUnits::Metres ? "m" : "mm"); }},
      HVS_DOUBLE("switch_threshold", hvs.switch_threshold),
      HVS_DOUBLE("hysteresis_band", hvs.hysteresis_band),
      HVS_INT("max_iterations", hvs.max_iterations),
      HVS_DOUBLE("convergence_sad", hvs.convergence_sad),
      HVS_DOUBLE("dataset_amplitude_mm", dataset.amplitude_mm),
      HVS_DOUBLE("dataset_periods", dataset.periods),
      HVS_INT("dataset_samples", dataset.samples),
      HVS_DOUBLE("shadow_fraction", dataset.augmentation.shadow_fraction),
      HVS_DOUBLE("occlusion_fraction", dataset.augmentation.occlusion_fraction),
      HVS_U64("dataset_seed", dataset.seed),
      HVS_INT("epochs", train.epochs),
      HVS_INT("batch_size", train.batch_size),
      HVS_DOUBLE("learning_rate", train.learning_rate),
      HVS_U64("train_seed", train.init_seed),
      HVS_U64("shuffle_seed", train.shuffle_seed),
      {"model_path", [](Settings& s, const std::string& v) { s.model_path = v; },
       [](const Settings& s) { return s.model_path; }},
      {"occlusions", [](Settings& s, const std::string& v) { s.disturbances.occlusions = parse_occlusions(v); },
       [](const Settings& s) {
         std::string out;
         for (const auto& w : s.disturbances.occlusions) {
           out += (out.empty() ? "" : ";") + std::to_string(w.start) + "-" + std::to_string(w.end) + ":" +
                  std::to_string(w.rect.x) + "," + std::to_string(w.rect.y) + "," + std::to_string(w.rect.w) + "," +
                  std::to_string(w.rect.h);
         }
         return out;
       }},
      {"lighting", [](Settings& s, const std::string& v) { s.disturbances.lighting = parse_lighting(v); },
       [](const Settings& s) {
         std::string out;
         for (const auto& w : s.disturbances.lighting) {
           out += (out.empty() ? "" : ";") + std::to_string(w.start) + "-" + std::to_string(w.end) + ":" + fmt(w.gain);
         }
         return out;
       }},
      {"actuator_noise_std_mm",
       [](Settings& s, const std::string& v) {
         s.disturbances.noise.std_mm = to_double(v);
         s.disturbances.noise.enabled = s.disturbances.noise.std_mm > 0.0;
       },
       [](const Settings& s) { return fmt(s.disturbances.noise.std_mm); }},
      HVS_U64("actuator_noise_seed", disturbances.noise.seed),
      {"impulses", [](Settings& s, const std::string& v) { s.disturbances.impulses = parse_impulses(v); },
       [](const Settings& s) {
         std::string out;
         for (const auto& imp : s.disturbances.impulses) {
           out += (out.empty() ? "" : ";") + std::to_string(imp.iteration) + ":" + fmt(imp.dq1_mm) + "," +
                  fmt(imp.dq2_mm);
         }
         return out;
       }},
      HVS_INT("frame_every", frame_every),
      {"record_wall_time", [](Settings& s, const std::string& v) { s.record_wall_time = to_bool(v); },
       [](const Settings& s) { return std::string(s.record_wall_time ? "true" : "false"); }},
      {"calibration_values",
       [](Settings& s, const std::string& v) {
         s.calibration_values.clear();
         for (const auto& part : split(v, ',')) s.calibration_values.push_back(to_double(part));
       },
       [](const Settings& s) { return join_doubles(s.calibration_values); }},
  };
  return table;
}

#undef HVS_DOUBLE
#undef HVS_INT
#undef HVS_U64

}  // namespace

std::vector<OcclusionWindow> parse_occlusions(std::string_view text) {
  std::vector<OcclusionWindow> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto colon = split(item, ':');
    if (colon.size() != 2) throw ConfigError("occlusion entry must look like 's-e:x,y,w,h', got '" + item + "'");
    const auto [start, end] = parse_range(colon[0]);
    const auto r = split(colon[1], ',');
    if (r.size() != 4) throw ConfigError("occlusion rectangle needs x,y,w,h: '" + item + "'");
    out.push_back({start, end, {to_int(r[0]), to_int(r[1]), to_int(r[2]), to_int(r[3])}});
  }
  return out;
}

std::vector<LightingWindow> parse_lighting(std::string_view text) {
  std::vector<LightingWindow> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto colon = split(item, ':');
    if (colon.size() != 2) throw ConfigError("lighting entry must look like 's-e:gain', got '" + item + "'");
    const auto [start, end] = parse_range(colon[0]);
    out.push_back({start, end, to_double(colon[1])});
  }
  return out;
}

std::vector<Impulse> parse_impulses(std::string_view text) {
  std::vector<Impulse> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto colon = split(item, ':');
    if (colon.size() != 2) throw ConfigError("impulse entry must look like 'iter:dq1,dq2', got '" + item + "'");
    const TendonState dq = parse_tendon_pair(colon[1]);
    out.push_back({to_int(colon[0]), dq.q1, dq.q2});
  }
  return out;
}

TendonState parse_tendon_pair(std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw ConfigError("expected 'q1,q2', got '" + std::string(text) + "'");
  return {to_double(parts[0]), to_double(parts[1])};
}

Scene Settings::scene() const {
  Scene s = Scene::square(board_distance_mm, marker_half_spacing_mm, marker_radius_mm);
  s.texture = texture;
  return s;
}

CameraParams Settings::camera() const {
  return CameraParams::from_fov(image_width, image_height, fov_deg, assumed_depth_mm);
}

std::vector<TendonState> Settings::calibration_grid() const {
  std::vector<TendonState> grid;
  for (double a : calibration_values) {
    for (double b : calibration_values) grid.push_back({a, b});
  }
  return grid;
}

void Settings::validate() const {
  try {
    robot.validate();
    camera().validate();
    scene().validate();
    ibvs.validate();
    dlbvs.validate();
    hvs.validate();
    dataset.validate();
    train.validate();
    disturbances.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (policy_size < 8 || policy_size > std::min(image_width, image_height)) {
    throw ConfigError("policy_size must lie in [8, image size]");
  }
  if (dataset.image_size != policy_size) throw ConfigError("dataset image size must equal policy_size");
  if (frame_every < 0) throw ConfigError("frame_every must be >= 0");
  if (calibration_values.empty()) throw ConfigError("calibration_values must not be empty");
}

std::vector<std::pair<std::string, std::string>> Settings::snapshot() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& def : key_table()) out.emplace_back(def.name, def.get(*this));
  return out;
}

std::vector<std::string> settings_keys() {
  std::vector<std::string> keys;
  for (const auto& def : key_table()) keys.emplace_back(def.name);
  return keys;
}

Settings parse_settings(std::string_view text, const std::filesystem::path& base_dir) {
  std::map<std::string, const KeyDef*> index;
  for (const auto& def : key_table()) index[def.name] = &def;

  Settings s;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    try {
      it->second->set(s, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): " + e.what());
    }
  }
  s.dataset.image_size = s.policy_size;
  if (!s.model_path.empty() && !base_dir.empty() && std::filesystem::path(s.model_path).is_relative()) {
    s.model_path = (base_dir / s.model_path).lexically_normal().string();
  }
  s.validate();
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.parent_path());
}

}  // namespace hvs
