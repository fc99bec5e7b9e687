#include "hvs/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include "hvs/weights.hpp"

namespace hvs {

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::IBVS: return "ibvs";
    case ControllerKind::DLBVS: return "dlbvs";
    case ControllerKind::HVS: return "hvs";
  }
  return "?";
}

ControllerKind parse_controller(std::string_view text) {
  if (text == "ibvs") return ControllerKind::IBVS;
  if (text == "dlbvs") return ControllerKind::DLBVS;
  if (text == "hvs") return ControllerKind::HVS;
  throw ConfigError("controller must be ibvs, dlbvs or hvs, got '" + std::string(text) + "'");
}

void ScenarioSuite::validate() const {
  std::set<std::string> names;
  for (const auto& sc : scenarios) {
    if (!names.insert(sc.name).second) throw ConfigError("duplicate scenario name '" + sc.name + "'");
    sc.settings.validate();
  }
}

Environment::Environment(const Settings& s, const PolicyModel* model) : scene(s.scene()) {
  ctx.scene = &scene;
  ctx.cam = s.camera();
  ctx.robot = s.robot;
  ctx.ibvs = s.ibvs;
  ctx.dlbvs = s.dlbvs;
  ctx.hvs = s.hvs;
  ctx.model = model;
  ctx.policy_size = s.policy_size;
  target = capture_target(ctx);
}

std::string frame_filename(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03d.ppm", iteration);
  return buf;
}

RunLog run_scenario(const ScenarioConfig& cfg, const PolicyModel* model) {
  const Settings& s = cfg.settings;
  s.validate();
  if (!cfg.start.finite()) throw ConfigError("start must be finite");

  PolicyModel loaded;
  if (cfg.controller != ControllerKind::IBVS && !model) {
    if (s.model_path.empty()) throw ConfigError("controller " + std::string(to_string(cfg.controller)) + " needs model_path");
    try {
      loaded = load_weights(s.model_path);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cannot load model: ") + e.what());
    }
    model = &loaded;
  }
  if (model && model->arch.input_height != s.policy_size) throw ConfigError("model input size differs from policy_size");

  const Environment env(s, cfg.controller == ControllerKind::IBVS ? nullptr : model);
  const ServoContext& ctx = env.ctx;

  RunLog log;
  log.controller = std::string(to_string(cfg.controller));
  log.metadata = {{"scenario", cfg.name},
                  {"start", format_double(cfg.start.q1) + "," + format_double(cfg.start.q2)}};
  if (model) {
    log.metadata.emplace_back("model_epochs", std::to_string(model->meta.epochs));
    log.metadata.emplace_back("model_seed", std::to_string(model->meta.seed));
  }
  for (auto& kv : s.snapshot()) log.metadata.push_back(std::move(kv));

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  ActuatorDisturbance actuator(s.disturbances);
  TendonState q = cfg.start;
  ControllerMode mode = ControllerMode::DLBVS;
  using Clock = std::chrono::steady_clock;

  for (int iter = 1; iter <= s.hvs.max_iterations; ++iter) {
    q = q + actuator.next(iter);
    const Image frame = apply_disturbances(render(tip_pose(q, s.robot), env.scene, ctx.cam), s.disturbances, iter);
    if (!cfg.out_dir.empty() && s.frame_every > 0 && (iter - 1) % s.frame_every == 0) {
      write_pnm(cfg.out_dir / frame_filename(iter), frame);
    }

    RunRecord rec;
    rec.iter = iter;
    rec.q1_mm = q.q1;
    rec.q2_mm = q.q2;
    TendonState dq;

    const auto t0 = Clock::now();
    switch (cfg.controller) {
      case ControllerKind::HVS: {
        const StepResult step = hvs_step(q, mode, frame, env.target, ctx);
        const auto t1 = Clock::now();
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        dq = step.dq;
        mode = step.mode;
        rec.sad = step.sad;
        rec.features_visible = step.features_present;
        break;
      }
      case ControllerKind::DLBVS: {
        const Image gray = policy_input(frame, ctx.policy_size);
        dq = dlbvs_step(*model, gray, ctx.dlbvs);
        const auto t1 = Clock::now();
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        mode = ControllerMode::DLBVS;
        rec.sad = sad(gray, env.target.gray);
        rec.features_visible = detect_features(frame, env.scene, ctx.cam).all_visible();
        break;
      }
      case ControllerKind::IBVS: {
        const FeatureSet fs = detect_features(frame, env.scene, ctx.cam);
        if (fs.all_visible()) {
          try {
            dq = ibvs_step(fs, env.target.features, q, ctx.ibvs, ctx.cam, ctx.robot);
          } catch (const std::exception&) {
            dq = {};
          }
          if (!dq.finite()) dq = {};
        }
        const auto t1 = Clock::now();
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        mode = ControllerMode::IBVS;
        rec.sad = sad(policy_input(frame, ctx.policy_size), env.target.gray);
        rec.features_visible = fs.all_visible();
        break;
      }
    }
    rec.mode = mode;
    rec.dq1_mm = dq.q1;
    rec.dq2_mm = dq.q2;
    log.records.push_back(rec);
    q = q + dq;
  }

  if (!cfg.out_dir.empty()) {
    write_run_csv(cfg.out_dir / "run.csv", log, s.record_wall_time);
    write_timing_csv(cfg.out_dir / "timing.csv", log);
    write_metadata(cfg.out_dir / "metadata.txt", log);
  }
  return log;
}

ComparisonResult run_comparison(TendonState start, const Settings& settings, const PolicyModel* model,
                                const std::filesystem::path& out_dir) {
  PolicyModel loaded;
  if (!model) {
    if (settings.model_path.empty()) throw ConfigError("comparison needs model_path");
    loaded = load_weights(settings.model_path);
    model = &loaded;
  }
  ScenarioConfig cfg;
  cfg.start = start;
  cfg.settings = settings;

  ComparisonResult result;
  cfg.name = "compare-hvs";
  cfg.controller = ControllerKind::HVS;
  cfg.out_dir = out_dir.empty() ? out_dir : out_dir / "hvs";
  result.hvs = run_scenario(cfg, model);

  cfg.name = "compare-dlbvs";
  cfg.controller = ControllerKind::DLBVS;
  cfg.out_dir = out_dir.empty() ? out_dir : out_dir / "dlbvs";
  result.dlbvs = run_scenario(cfg, model);

  result.hvs_summary = summarize(result.hvs, settings.hvs.convergence_sad);
  result.dlbvs_summary = summarize(result.dlbvs, settings.hvs.convergence_sad);
  if (!out_dir.empty()) {
    const RunSummary rows[] = {result.hvs_summary, result.dlbvs_summary};
    write_summary_csv(out_dir / "summary.csv", rows);
    emit_plots(result.hvs, out_dir / "hvs", settings.hvs.convergence_sad);
    emit_plots(result.dlbvs, out_dir / "dlbvs", settings.hvs.convergence_sad);
  }
  return result;
}

RunSummary report_run(const std::filesystem::path& run_dir) {
  RunLog log = read_run_csv(run_dir / "run.csv");
  if (std::filesystem::exists(run_dir / "timing.csv")) merge_timing_csv(run_dir / "timing.csv", log);
  log.controller = run_dir.filename().string();
  double convergence_sad = HvsConfig{}.convergence_sad;
  if (std::ifstream meta(run_dir / "metadata.txt"); meta) {
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 3);
      if (key == "controller") log.controller = value;
      if (key == "convergence_sad") convergence_sad = std::stod(value);
    }
  }
  const RunSummary summary = summarize(log, convergence_sad);
  const RunSummary rows[] = {summary};
  write_summary_csv(run_dir / "summary.csv", rows);
  emit_plots(log, run_dir, convergence_sad);
  return summary;
}

}  // namespace hvs
