#include <doctest.h>

#include "hvs/hvs.hpp"

using namespace hvs;

namespace {

struct Fixture {
  Scene scene = Scene::square(1500, 150, 60);
  PolicyModel model = PolicyModel::zeros(Architecture::servo_policy());
  ServoContext ctx;

  Fixture() {
    ctx.scene = &scene;
    ctx.cam = CameraParams::from_fov(128, 128, 110, 1000);
    ctx.model = &model;
  }

  Image view(TendonState q) const { return render(tip_pose(q, ctx.robot), scene, ctx.cam); }
};

}  // namespace

TEST_CASE("sad examples") {
  Image a(2, 2, 1, 0.0), b(2, 2, 1, 0.0);
  CHECK(sad(a, b) == 0.0);
  b.data = {1, 1, 1, 1};
  CHECK(sad(a, b) == 1.0);
  b.data = {0.2, 0.0, 0.0, 0.0};
  CHECK(sad(a, b) == doctest::Approx(0.05));
  CHECK(sad(b, a) == sad(a, b));
  CHECK_THROWS(sad(a, Image(3, 2, 1)));
}

TEST_CASE("mode selection") {
  HvsConfig cfg;
  CHECK(select_mode(0.08, true, cfg, ControllerMode::DLBVS) == ControllerMode::IBVS);
  CHECK(select_mode(0.12, true, cfg, ControllerMode::IBVS) == ControllerMode::DLBVS);
  CHECK(select_mode(0.08, false, cfg, ControllerMode::IBVS) == ControllerMode::DLBVS);
  CHECK(select_mode(0.10, true, cfg, ControllerMode::DLBVS) == ControllerMode::DLBVS);
  cfg.hysteresis_band = 0.03;
  CHECK(select_mode(0.12, true, cfg, ControllerMode::IBVS) == ControllerMode::IBVS);
  CHECK(select_mode(0.12, true, cfg, ControllerMode::DLBVS) == ControllerMode::DLBVS);
  CHECK(select_mode(0.14, true, cfg, ControllerMode::IBVS) == ControllerMode::DLBVS);
}

TEST_CASE("mode names") {
  CHECK(to_string(ControllerMode::IBVS) == "IBVS");
  CHECK(parse_mode("DLBVS") == ControllerMode::DLBVS);
  CHECK_THROWS(parse_mode("ibvs2"));
}

TEST_CASE("config validation") {
  HvsConfig cfg;
  cfg.switch_threshold = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.max_iterations = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.hysteresis_band = -0.1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("hybrid step picks IBVS near the target and DLBVS far away") {
  Fixture fx;
  const ServoTarget target = capture_target(fx.ctx);
  CHECK(target.gray.width == 64);
  CHECK(target.features.all_visible());

  const StepResult at = hvs_step({0, 0}, ControllerMode::DLBVS, fx.view({0, 0}), target, fx.ctx);
  CHECK(at.sad == 0.0);
  CHECK(at.mode == ControllerMode::IBVS);
  CHECK(std::abs(at.dq.q1) < 1e-9);

  const StepResult near = hvs_step({1, 0.5}, ControllerMode::DLBVS, fx.view({1, 0.5}), target, fx.ctx);
  CHECK(near.mode == ControllerMode::IBVS);
  CHECK(near.dq.q1 < 0);

  const StepResult far = hvs_step({10, -8}, ControllerMode::IBVS, fx.view({10, -8}), target, fx.ctx);
  CHECK(far.sad > fx.ctx.hvs.switch_threshold);
  CHECK(far.mode == ControllerMode::DLBVS);
  CHECK(far.dq == TendonState{0, 0});
}

TEST_CASE("occluded features force DLBVS") {
  Fixture fx;
  const ServoTarget target = capture_target(fx.ctx);
  Image frame = fx.view({0.2, 0.2});
  for (int y = 0; y < 128; ++y)
    for (int x = 64; x < 128; ++x)
      for (int c = 0; c < 3; ++c) frame.at(x, y, c) = 0.0;
  const StepResult r = hvs_step({0.2, 0.2}, ControllerMode::IBVS, frame, target, fx.ctx);
  CHECK_FALSE(r.features_present);
  CHECK(r.mode == ControllerMode::DLBVS);
  CHECK_FALSE(r.fallback);
}

TEST_CASE("IBVS failure falls back to DLBVS in the same iteration") {
  Fixture fx;
  const ServoTarget target = capture_target(fx.ctx);
  fx.ctx.ibvs.lambda = -1.0;
  fx.model.params.back().values = {0.099668, 0.0};
  StepResult r;
  CHECK_NOTHROW(r = hvs_step({1, 0}, ControllerMode::DLBVS, fx.view({1, 0}), target, fx.ctx));
  CHECK(r.fallback);
  CHECK(r.mode == ControllerMode::DLBVS);
  CHECK(r.dq.q1 == doctest::Approx(-0.5).epsilon(1e-4));
}

TEST_CASE("IBVS converges from a nearby start") {
  Fixture fx;
  const ServoTarget target = capture_target(fx.ctx);
  double initial = 0.0;
  CHECK(ibvs_converges(fx.ctx, target, {2, -1}, &initial));
  CHECK(initial > 0.0);
}

TEST_CASE("calibration threshold and failure") {
  Fixture fx;
  fx.ctx.hvs.max_iterations = 120;
  const TendonState starts[] = {{1, 0}, {0, 2}, {40, 40}};
  const CalibrationResult r = calibrate_switch_threshold(fx.ctx, starts);
  CHECK(r.tried == 3);
  CHECK(r.converged == 2);
  CHECK(r.threshold == doctest::Approx(r.best_initial_sad * 0.9));
  CHECK(r.best_start == TendonState{0, 2});

  const TendonState hopeless[] = {{40, 40}};
  CHECK_THROWS_AS(calibrate_switch_threshold(fx.ctx, hopeless), CalibrationError);
  CHECK_THROWS(calibrate_switch_threshold(fx.ctx, std::span<const TendonState>{}));
}
