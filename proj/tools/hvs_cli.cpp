#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "hvs/harness.hpp"
#include "hvs/weights.hpp"

using namespace hvs;

namespace {

Settings settings_from(const std::string& path) { return path.empty() ? parse_settings("") : load_settings(path); }

void print_summary(const RunSummary& s) {
  std::cout << s.controller << ": completed=" << (s.task_completed ? "yes" : "no") << " convergence="
            << (s.convergence_iteration ? std::to_string(*s.convergence_iteration) : std::string("none"))
            << " final_sad=" << s.final_sad << " iter_time_s=" << s.mean_iteration_time_s << " std=(" << s.std[0]
            << ", " << s.std[1] << ") tpl=(" << s.tpl[0] << ", " << s.tpl[1] << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid visual servoing simulator for a tendon-driven continuum robot"};
  app.require_subcommand(1);

  std::string config, out, dataset_dir, start_text = "10,-8", controller = "hvs", run_dir;

  auto* gen = app.add_subcommand("gen-dataset", "Render the spiral training set");
  gen->add_option("--config", config, "Settings file");
  gen->add_option("--out", out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the policy network");
  train_cmd->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  train_cmd->add_option("--config", config, "Settings file");
  train_cmd->add_option("--out", out, "Weights file")->required();

  auto* calib = app.add_subcommand("calibrate", "Estimate the IBVS switch threshold");
  calib->add_option("--config", config, "Settings file");

  auto* servo = app.add_subcommand("servo", "Run one closed-loop scenario");
  servo->add_option("--controller", controller, "ibvs, dlbvs or hvs")
      ->check(CLI::IsMember({"ibvs", "dlbvs", "hvs"}));
  servo->add_option("--start", start_text, "Initial tendon displacement q1,q2 in mm");
  servo->add_option("--config", config, "Settings file");
  servo->add_option("--out", out, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Run HVS and DLBVS from the same start");
  compare->add_option("--start", start_text, "Initial tendon displacement q1,q2 in mm");
  compare->add_option("--config", config, "Settings file");
  compare->add_option("--out", out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Summarize a run directory and draw its plots");
  report->add_option("--run", run_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Settings s = settings_from(config);
      const Dataset ds = generate_dataset(s.scene(), s.camera(), s.robot, s.dataset);
      save_dataset(ds, out);
      std::cout << "wrote " << ds.samples.size() << " samples (" << ds.stats.shadowed << " shadowed, "
                << ds.stats.occluded << " occluded) to " << out << "\n";
    } else if (*train_cmd) {
      const Settings s = settings_from(config);
      const Dataset ds = load_dataset(dataset_dir);
      const auto result = train(ds, s.train, Architecture::servo_policy(s.policy_size), [](int epoch, double loss) {
        std::cout << "epoch " << epoch << " mean_mse " << loss << std::endl;
      });
      save_weights(out, result.model);
      const auto log_path = std::filesystem::path(out).parent_path() / "training_log.csv";
      write_training_log(log_path, result.epoch_loss);
      std::cout << "saved " << out << " and " << log_path.string() << "\n";
    } else if (*calib) {
      const Settings s = settings_from(config);
      const Environment env(s, nullptr);
      const auto grid = s.calibration_grid();
      const CalibrationResult r = calibrate_switch_threshold(env.ctx, grid);
      std::cout << "converged " << r.converged << "/" << r.tried << " starts; largest initial SAD " << r.best_initial_sad
                << " at (" << r.best_start.q1 << ", " << r.best_start.q2 << ")\n";
      std::cout << "switch_threshold = " << format_double(r.threshold) << "\n";
    } else if (*servo) {
      ScenarioConfig sc;
      sc.name = "servo-" + controller;
      sc.settings = settings_from(config);
      sc.start = parse_tendon_pair(start_text);
      sc.controller = parse_controller(controller);
      sc.out_dir = out;
      const RunLog log = run_scenario(sc);
      emit_plots(log, out, sc.settings.hvs.convergence_sad);
      RunSummary summary = summarize(log, sc.settings.hvs.convergence_sad);
      const RunSummary rows[] = {summary};
      write_summary_csv(std::filesystem::path(out) / "summary.csv", rows);
      print_summary(summary);
    } else if (*compare) {
      const Settings s = settings_from(config);
      const auto r = run_comparison(parse_tendon_pair(start_text), s, nullptr, out);
      print_summary(r.hvs_summary);
      print_summary(r.dlbvs_summary);
    } else if (*report) {
      print_summary(report_run(run_dir));
    }
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
