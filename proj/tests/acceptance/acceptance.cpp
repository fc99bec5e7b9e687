#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "hvs/harness.hpp"
#include "hvs/weights.hpp"
#include "oracles.hpp"
#include "xml_check.hpp"

using namespace hvs;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kPointMatrixRelTol = 1e-12;
constexpr double kPenroseTol = 1e-10;
constexpr double kArcOracleTolMm = 1e-6;
constexpr double kStraightLimitTolMm = 1e-6;
constexpr double kJacobianFactor = 10.0;
constexpr double kJacobianAtRest = 25.0;
constexpr double kJacobianAtRestRel = 0.01;
constexpr double kGradCheckTol = 1e-4;
constexpr std::size_t kGradCheckPerLayer = 3000;
constexpr double kOverfitMse = 1e-5;
constexpr int kOverfitSteps = 2000;
constexpr double kTrainMse = 5e-3;
constexpr double kSadConverged = 0.06;
constexpr int kIbvsWithin = 100;
constexpr int kMonotoneFrom = 5;
constexpr double kFeatureErrorSlackPx = 1e-9;
constexpr int kSwitchBackWithin = 3;
constexpr double kRobustFinalSad = 0.08;
constexpr double kWeightsOutputTol = 1e-5;

const TendonState kCompareStart{10, -8};
const TendonState kSwitchStart{-10, 9};
const char* kOcclusionScript = "50-80:57,57,28,28; 110-140:57,57,28,28; 190-230:57,57,28,28";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

class Suite {
 public:
  void run(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs >= limit_s) {
      o.pass = false;
      o.detail += "; over time limit " + fmt(limit_s) + " s";
    }
    std::printf("%s criterion %d: %s [%s; %.2f s]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures_ += !o.pass;
  }

  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string slurp(const fs::path& p) { return testutil::slurp(p.string()); }

// Strict netpbm reader written independently of the library: P5/P6, maxval
// 255, single whitespace after maxval, exact payload length.
bool netpbm_valid(const fs::path& path) {
  const std::string bytes = slurp(path);
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic;
  auto skip_comments = [&] {
    while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
  };
  skip_comments();
  in >> w;
  skip_comments();
  in >> h;
  skip_comments();
  in >> maxval;
  if (!in || (magic != "P5" && magic != "P6") || w <= 0 || h <= 0 || maxval != 255) return false;
  if (!std::isspace(static_cast<unsigned char>(in.get()))) return false;
  const auto header = static_cast<std::size_t>(in.tellg());
  const std::size_t channels = magic == "P6" ? 3 : 1;
  return bytes.size() - header == static_cast<std::size_t>(w) * h * channels;
}

Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

double rel_norm(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

struct Runner {
  fs::path work;
  const PolicyModel* model = nullptr;
  std::vector<std::pair<ScenarioConfig, fs::path>> replays;

  RunLog run(ScenarioConfig sc, const std::string& dir) {
    sc.out_dir = work / "runs" / dir;
    const RunLog log = run_scenario(sc, model);
    emit_plots(log, sc.out_dir, sc.settings.hvs.convergence_sad);
    replays.emplace_back(sc, sc.out_dir / "run.csv");
    return log;
  }

  ComparisonResult compare(TendonState start, const Settings& s, const std::string& dir) {
    const fs::path out = work / "runs" / dir;
    ComparisonResult r = run_comparison(start, s, model, out);
    ScenarioConfig sc;
    sc.start = start;
    sc.settings = s;
    sc.name = "compare-hvs";
    sc.controller = ControllerKind::HVS;
    replays.emplace_back(sc, out / "hvs" / "run.csv");
    sc.name = "compare-dlbvs";
    sc.controller = ControllerKind::DLBVS;
    replays.emplace_back(sc, out / "dlbvs" / "run.csv");
    return r;
  }
};

Outcome point_matrix_exactness() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uv(-64, 64), f(10, 2000), z(50, 5000);
  double worst = 0.0;
  int bitwise = 0;
  for (int i = 0; i < 1000; ++i) {
    const double u = uv(rng), v = uv(rng), ff = f(rng), zz = z(rng);
    const Matrix l = interaction_matrix_point(u, v, ff, zz);
    const auto ref = oracle::point_matrix(u, v, ff, zz);
    bool same = true;
    for (int k = 0; k < 12; ++k) {
      const double a = l(k / 6, k % 6), b = ref[k];
      same = same && a == b;
      if (a != b) worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
    }
    bitwise += same;
  }
  return {worst <= kPointMatrixRelTol, std::to_string(bitwise) + "/1000 bitwise equal, worst rel " + fmt(worst)};
}

Outcome penrose() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (auto [r, c] : {std::pair{2, 6}, std::pair{8, 6}, std::pair{8, 2}}) {
    for (int trial = 0; trial < 1000; ++trial) {
      const Matrix a = random_matrix(rng, r, c);
      const Matrix p = pseudo_inverse(a);
      worst = std::max({worst, rel_norm(a * p * a, a), rel_norm(p * a * p, p), rel_norm((a * p).transpose(), a * p),
                        rel_norm((p * a).transpose(), p * a)});
    }
  }
  return {worst <= kPenroseTol, "3000 matrices, worst residual " + fmt(worst)};
}

Outcome kinematics() {
  const RobotParams params;
  const double arc_err = (tip_pose({10, 0}, params).position -
                          oracle::arc_tip({10, 0}, params.backbone_length_mm, params.tendon_pitch_radius_mm))
                             .norm();
  double limit_err = 0.0;
  for (double theta : {1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    const double qn = theta * params.tendon_pitch_radius_mm;
    for (double ang : {0.0, 1.0, 2.5, -2.0}) {
      const TendonState q{qn * std::cos(ang), qn * std::sin(ang)};
      const Vec3 ref = oracle::arc_tip(q, params.backbone_length_mm, params.tendon_pitch_radius_mm, 200);
      limit_err = std::max(limit_err, (tip_pose(q, params).position - ref).norm());
    }
  }
  double max_reach = 0.0;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j)
      max_reach = std::max(max_reach, tip_pose({-10.0 + 0.5 * i, -10.0 + 0.5 * j}, params).position.norm());
  const bool ok = arc_err <= kArcOracleTolMm && limit_err <= kStraightLimitTolMm &&
                  max_reach <= params.backbone_length_mm;
  return {ok, "arc error " + fmt(arc_err) + " mm, straight-limit error " + fmt(limit_err) + " mm, max |p| " +
                  fmt(max_reach) + " mm"};
}

Outcome jacobian() {
  const RobotParams params;
  const double delta = 0.1;
  double worst_ratio = 0.0;
  for (int i = 0; i <= 8; ++i) {
    for (int j = 0; j <= 8; ++j) {
      const TendonState q{-8.0 + 2.0 * i, -8.0 + 2.0 * j};
      const Matrix fd = robot_jacobian_fd(q, params, delta);
      const Matrix ref = oracle::central_jacobian(q, params, 1e-4);
      const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
      worst_ratio = std::max(worst_ratio, (fd - ref).cwiseAbs().maxCoeff() / (kJacobianFactor * delta * scale));
    }
  }
  const double dpx = robot_jacobian_fd({0, 0}, params, delta)(0, 0);
  const bool rest_ok = std::abs(dpx - kJacobianAtRest) <= kJacobianAtRestRel * kJacobianAtRest;
  return {worst_ratio <= 1.0 && rest_ok,
          "worst error / bound " + fmt(worst_ratio) + " over 81 points, dpx/dq1 at rest " + fmt(dpx)};
}

Outcome gradient_check(const Settings& s) {
  const Architecture arch = Architecture::servo_policy(s.policy_size);
  PolicyModel m = PolicyModel::initialize(arch, 17);
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> bias(-0.05, 0.05);
  for (auto& t : m.params)
    if (t.name.ends_with(".bias"))
      for (double& b : t.values) b = bias(rng);
  const Image view = render(tip_pose({3, -2}, s.robot), s.scene(), s.camera());
  const auto input = network_input(arch, policy_input(view, s.policy_size));
  const std::vector<double> label{0.2, -0.3};
  const GradCheckResult r = grad_check(m, input, label, 1e-5, kGradCheckPerLayer, 19);
  return {r.max_relative_error < kGradCheckTol, std::to_string(r.checked) + " of " +
                                                    std::to_string(m.parameter_count()) +
                                                    " parameters, max rel error " + fmt(r.max_relative_error)};
}

Outcome overfit(const Settings& s) {
  DatasetSpec spec = s.dataset;
  spec.samples = 8;
  const Dataset ds = generate_dataset(s.scene(), s.camera(), s.robot, spec);
  const Architecture arch = Architecture::servo_policy(s.policy_size);
  const TrainingSet set = TrainingSet::from(ds, arch);
  Trainer trainer(PolicyModel::initialize(arch, s.train.init_seed), s.train);
  const std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5, 6, 7};
  double mse = dataset_mse(trainer.model(), set);
  int steps = 0;
  while (steps < kOverfitSteps && mse >= kOverfitMse) {
    trainer.step(set, batch);
    ++steps;
    if (steps % 10 == 0 || steps == kOverfitSteps) mse = dataset_mse(trainer.model(), set);
  }
  return {mse < kOverfitMse, "MSE " + fmt(mse) + " after " + std::to_string(steps) + " steps (lr " +
                                 fmt(s.train.learning_rate) + ")"};
}

Outcome full_training(const Settings& s, const fs::path& work, PolicyModel& out) {
  const Dataset ds = generate_dataset(s.scene(), s.camera(), s.robot, s.dataset);
  save_dataset(ds, work / "dataset");
  const TrainResult r = train(ds, s.train, Architecture::servo_policy(s.policy_size));
  out = r.model;
  save_weights(work / "policy.hvsw", out);
  write_training_log(work / "training_log.csv", r.epoch_loss);
  const double final_mse = dataset_mse(out, TrainingSet::from(ds, out.arch));
  bool decreasing = r.epoch_loss.size() == static_cast<std::size_t>(s.train.epochs);
  for (std::size_t i = 1; i < r.epoch_loss.size(); ++i) decreasing = decreasing && r.epoch_loss[i] < r.epoch_loss[i - 1];
  return {final_mse <= kTrainMse && decreasing,
          "final training MSE " + fmt(final_mse) + ", epoch loss " + fmt(r.epoch_loss.front()) + " -> " +
              fmt(r.epoch_loss.back()) + (decreasing ? ", strictly decreasing" : ", NOT decreasing")};
}

Outcome ibvs_only(Runner& runner, const Settings& s) {
  ScenarioConfig sc;
  sc.name = "ibvs-5-4";
  sc.controller = ControllerKind::IBVS;
  sc.start = {5, 4};
  sc.settings = s;
  const RunLog log = runner.run(sc, "ibvs_5_4");
  const auto sads = log.sad_series();
  std::optional<int> first_below;
  for (std::size_t i = 0; i < sads.size() && !first_below; ++i)
    if (sads[i] < kSadConverged) first_below = static_cast<int>(i) + 1;

  const Environment env(s, nullptr);
  std::vector<double> err;
  for (const auto& r : log.records) {
    const Image frame = render(tip_pose({r.q1_mm, r.q2_mm}, s.robot), env.scene, env.ctx.cam);
    const FeatureSet fs = detect_features(frame, env.scene, env.ctx.cam);
    err.push_back(fs.all_visible() ? (fs.stacked() - env.target.features.stacked()).norm() : INFINITY);
  }
  int violations = 0;
  for (std::size_t t = kMonotoneFrom; t < err.size(); ++t) violations += err[t] > err[t - 1] + kFeatureErrorSlackPx;
  const bool ok = first_below && *first_below <= kIbvsWithin && violations == 0;
  return {ok, "SAD < 0.06 at iteration " + (first_below ? std::to_string(*first_below) : std::string("never")) +
                  ", feature error " + fmt(err.front()) + " -> " + fmt(err.back()) + " px, " +
                  std::to_string(violations) + " increases after iteration 5"};
}

Outcome dlbvs_quadrants(Runner& runner, const Settings& s) {
  bool ok = true;
  std::string detail;
  for (auto [a, b] : {std::pair{10.0, 8.0}, std::pair{-10.0, 8.0}, std::pair{-10.0, -8.0}, std::pair{10.0, -8.0}}) {
    ScenarioConfig sc;
    sc.name = "dlbvs-quadrant";
    sc.controller = ControllerKind::DLBVS;
    sc.start = {a, b};
    sc.settings = s;
    const RunLog log = runner.run(sc, "dlbvs_" + format_double(a) + "_" + format_double(b));
    const RunSummary sum = summarize(log, kSadConverged);
    ok = ok && sum.task_completed;
    detail += (detail.empty() ? "" : "; ") + std::string("(") + fmt(a) + "," + fmt(b) + ") conv " +
              (sum.convergence_iteration ? std::to_string(*sum.convergence_iteration) : std::string("none")) +
              " final " + fmt(sum.final_sad);
  }
  return {ok, detail};
}

Outcome ordering(Runner& runner, const Settings& s) {
  const ComparisonResult r = runner.compare(kCompareStart, s, "compare");
  const RunSummary& h = r.hvs_summary;
  const RunSummary& d = r.dlbvs_summary;
  const bool conv = h.convergence_iteration && (!d.convergence_iteration || *h.convergence_iteration < *d.convergence_iteration);
  const bool sad_ok = h.final_sad <= d.final_sad;
  const bool tpl_ok = h.tpl[0] < d.tpl[0] && h.tpl[1] < d.tpl[1];
  const bool time_ok = h.mean_iteration_time_s < d.mean_iteration_time_s;
  auto it = [](const RunSummary& x) {
    return x.convergence_iteration ? std::to_string(*x.convergence_iteration) : std::string("none");
  };
  return {conv && sad_ok && tpl_ok && time_ok,
          "conv " + it(h) + " vs " + it(d) + ", final SAD " + fmt(h.final_sad) + " vs " + fmt(d.final_sad) + ", TPL (" +
              fmt(h.tpl[0]) + "," + fmt(h.tpl[1]) + ") vs (" + fmt(d.tpl[0]) + "," + fmt(d.tpl[1]) + "), iter time " +
              fmt(h.mean_iteration_time_s * 1e3) + " ms vs " + fmt(d.mean_iteration_time_s * 1e3) + " ms"};
}

Outcome switching_trace(Runner& runner, Settings s) {
  s.disturbances.occlusions = parse_occlusions(kOcclusionScript);
  s.frame_every = 10;
  ScenarioConfig sc;
  sc.name = "switching-trace";
  sc.start = kSwitchStart;
  sc.settings = s;
  const RunLog log = runner.run(sc, "switching");
  auto mode_at = [&](int iter) { return log.records.at(iter - 1).mode; };
  std::vector<std::string> problems;
  if (mode_at(1) != ControllerMode::DLBVS) problems.push_back("iteration 1 not DLBVS");
  for (auto [a, b] : {std::pair{110, 140}, std::pair{190, 230}})
    for (int i = a + 1; i < b; ++i)
      if (mode_at(i) != ControllerMode::DLBVS) problems.push_back("IBVS at " + std::to_string(i));
  std::string back;
  for (const auto& w : s.disturbances.occlusions) {
    int found = 0;
    for (int i = w.end + 1; i <= w.end + kSwitchBackWithin && !found; ++i)
      if (mode_at(i) == ControllerMode::IBVS) found = i;
    back += (back.empty() ? "" : ", ") + std::to_string(w.start) + "-" + std::to_string(w.end) + ":" +
            (found ? std::to_string(found) : std::string("none"));
    if (!found) problems.push_back("no IBVS within 3 after window " + std::to_string(w.end));
  }
  if (mode_at(299) != ControllerMode::IBVS) problems.push_back("iteration 299 not IBVS");
  std::string detail = "IBVS resumes at " + back + "; iteration 299 " + std::string(to_string(mode_at(299)));
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

Outcome robustness(Runner& runner, const Settings& base) {
  struct Case {
    std::string name;
    std::string config;
  };
  const Case cases[] = {{"occlusion", std::string("occlusions = ") + kOcclusionScript},
                        {"lighting", "lighting = 40-60:0.4; 90-110:1.6; 140-160:0.6"},
                        {"noise", "actuator_noise_std_mm = 0.03\nactuator_noise_seed = 11"},
                        {"impulse", "impulses = 150:2,-2"}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    Settings s = parse_settings(c.config);
    s.disturbances.validate();
    Settings run_settings = base;
    run_settings.disturbances = s.disturbances;
    ScenarioConfig sc;
    sc.name = "robust-" + c.name;
    sc.start = kCompareStart;
    sc.settings = run_settings;
    const RunSummary sum = summarize(runner.run(sc, "robust_" + c.name), kSadConverged);
    ok = ok && sum.final_sad < kRobustFinalSad && sum.task_completed;
    detail += (detail.empty() ? "" : "; ") + c.name + " final " + fmt(sum.final_sad) +
              (sum.task_completed ? " completed" : " NOT completed");
  }
  return {ok, detail};
}

Outcome determinism(Runner& runner) {
  int same = 0;
  std::string bad;
  for (std::size_t i = 0; i < runner.replays.size(); ++i) {
    ScenarioConfig sc = runner.replays[i].first;
    sc.out_dir = runner.work / "replay" / std::to_string(i);
    run_scenario(sc, runner.model);
    const std::string a = slurp(runner.replays[i].second);
    if (!a.empty() && a == slurp(sc.out_dir / "run.csv"))
      ++same;
    else
      bad += " " + runner.replays[i].second.string();
  }
  return {same == static_cast<int>(runner.replays.size()) && same > 0,
          std::to_string(same) + "/" + std::to_string(runner.replays.size()) + " run.csv byte-identical" + bad};
}

Outcome file_formats(const fs::path& work, const PolicyModel& model, const Settings& s) {
  const fs::path path = work / "roundtrip.hvsw";
  save_weights(path, model);
  const PolicyModel back = load_weights(path);
  PolicyModel rounded = model;
  for (auto& t : rounded.params)
    for (double& v : t.values) v = static_cast<float>(v);

  double worst = 0.0;
  bool exact = true;
  for (TendonState q : {TendonState{0, 0}, TendonState{4, -3}, TendonState{-9, 7}}) {
    const Image img = policy_input(render(tip_pose(q, s.robot), s.scene(), s.camera()), s.policy_size);
    const auto a = forward(model, img), b = forward(back, img), c = forward(rounded, img);
    for (std::size_t k = 0; k < a.size(); ++k) {
      worst = std::max(worst, std::abs(a[k] - b[k]));
      exact = exact && b[k] == c[k];
    }
  }
  const auto reencoded = encode_weights(back);
  const bool stable = std::string(reencoded.begin(), reencoded.end()) == slurp(path);
  const bool weights_ok = exact && stable && worst <= kWeightsOutputTol;

  int images = 0, bad_images = 0, svgs = 0, bad_svgs = 0;
  for (const auto& e : fs::recursive_directory_iterator(work)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".ppm" || ext == ".pgm") {
      ++images;
      bool ok = netpbm_valid(e.path());
      if (ok) {
        const Image img = read_pnm(e.path());
        ok = img.width > 0 && img.channels == (ext == ".ppm" ? 3 : 1);
      }
      bad_images += !ok;
    } else if (ext == ".svg") {
      ++svgs;
      std::string root;
      bad_svgs += !(testutil::xml_well_formed(slurp(e.path()), &root) && root == "svg");
    }
  }
  const bool ok = weights_ok && images > 0 && bad_images == 0 && svgs > 0 && bad_svgs == 0;
  return {ok, "weights output diff " + fmt(worst) + (exact ? " (matches float32 weights exactly)" : " (float32 mismatch)") +
                  ", " + std::to_string(images - bad_images) + "/" + std::to_string(images) + " PPM/PGM valid, " +
                  std::to_string(svgs - bad_svgs) + "/" + std::to_string(svgs) + " SVG well-formed"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string work = "acceptance_work", model_path;
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--model", model_path, "Reuse trained weights and skip full training");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir(work);
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Settings s = parse_settings("");
  Suite suite;

  suite.run(1, "point interaction matrix exactness", 1, point_matrix_exactness);
  suite.run(2, "pseudo-inverse Penrose conditions", 5, penrose);
  suite.run(3, "constant-curvature kinematics", 5, kinematics);
  suite.run(4, "finite-difference robot Jacobian", 2, jacobian);
  suite.run(5, "backprop gradient check", 30, [&] { return gradient_check(s); });

  PolicyModel model;
  suite.run(6, "training (overfit and full run)", 20 * 60, [&] {
    const Outcome a = overfit(s);
    Outcome b;
    if (model_path.empty()) {
      b = full_training(s, dir, model);
    } else {
      model = load_weights(model_path);
      b = {false, "full training skipped, weights loaded from " + model_path};
    }
    return Outcome{a.pass && b.pass, "(a) " + a.detail + "; (b) " + b.detail};
  });

  Runner runner{dir, &model, {}};
  suite.run(7, "IBVS-only convergence from (5,4)", 10, [&] { return ibvs_only(runner, s); });
  suite.run(8, "DLBVS-only convergence from four quadrants", 60, [&] { return dlbvs_quadrants(runner, s); });
  suite.run(9, "HVS vs DLBVS orderings from (10,-8)", 120, [&] { return ordering(runner, s); });
  suite.run(10, "switching trace under occlusion", 30, [&] { return switching_trace(runner, s); });
  suite.run(11, "robustness suite", 120, [&] { return robustness(runner, s); });
  suite.run(12, "deterministic replay", 0, [&] { return determinism(runner); });
  suite.run(13, "file formats", 0, [&] { return file_formats(dir, model, s); });

  std::printf("%d of 13 criteria failed\n", suite.failures());
  return suite.failures() == 0 ? 0 : 1;
}
