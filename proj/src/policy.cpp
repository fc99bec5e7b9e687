#include "hvs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hvs/disturbance.hpp"

namespace hvs {

namespace {

double unit_scale(LabelUnits units) { return units == LabelUnits::Metres ? 1e-3 : 1.0; }

}  // namespace

std::array<double, 2> map_label(TendonState q, LabelUnits units) {
  const double s = unit_scale(units);
  return {std::tanh(10.0 * q.q1 * s), std::tanh(10.0 * q.q2 * s)};
}

TendonState unmap_label(std::array<double, 2> y, LabelUnits units) {
  const double s = unit_scale(units);
  auto inv = [s](double v) { return std::atanh(std::clamp(v, -kLabelClamp, kLabelClamp)) / 10.0 / s; };
  return {inv(y[0]), inv(y[1])};
}

std::vector<TendonState> spiral_path(double amplitude_mm, double periods, int n) {
  if (!(amplitude_mm > 0.0)) throw std::invalid_argument("spiral_path: amplitude must be positive");
  if (!(periods >= 1.0)) throw std::invalid_argument("spiral_path: periods must be >= 1");
  if (n < 1) throw std::invalid_argument("spiral_path: n must be >= 1");
  std::vector<TendonState> path;
  path.reserve(n);
  for (int x = 1; x <= n; ++x) {
    const double r = amplitude_mm / n * x;
    const double a = 2.0 * std::numbers::pi * periods * x / n;
    path.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return path;
}

Image policy_input(const Image& frame, int size) { return downsample(to_grayscale(frame), size, size); }

void Augmentation::validate() const {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(shadow_fraction) || !in01(occlusion_fraction)) {
    throw std::invalid_argument("Augmentation: fractions must lie in [0, 1]");
  }
  if (!(shadow_gain_min > 0.0) || shadow_gain_max < shadow_gain_min) {
    throw std::invalid_argument("Augmentation: bad shadow gain range");
  }
  if (occlusion_min_px < 1 || occlusion_max_px < occlusion_min_px) {
    throw std::invalid_argument("Augmentation: bad occlusion size range");
  }
}

void DatasetSpec::validate() const {
  augmentation.validate();
  if (image_size < 1) throw std::invalid_argument("DatasetSpec: image size must be positive");
  if (augmentation.occlusion_max_px > image_size) {
    throw std::invalid_argument("DatasetSpec: occlusion larger than the image");
  }
  (void)spiral_path(amplitude_mm, periods, std::max(samples, 1));
  if (samples < 1) throw std::invalid_argument("DatasetSpec: samples must be >= 1");
}

void Dataset::validate() const {
  if (samples.empty()) throw std::invalid_argument("Dataset: no samples");
  const Image& first = samples.front().image;
  for (const auto& s : samples) {
    if (!s.image.same_shape(first) || s.image.channels != 1) {
      throw std::invalid_argument("Dataset: inconsistent image shapes");
    }
    for (double y : s.label) {
      if (!(std::abs(y) < 1.0)) throw std::invalid_argument("Dataset: label outside (-1, 1)");
    }
  }
}

Dataset generate_dataset(const Scene& scene, const CameraParams& cam, const RobotParams& params,
                         const DatasetSpec& spec) {
  spec.validate();
  scene.validate();
  cam.validate();
  params.validate();

  Dataset ds;
  ds.seed = spec.seed;
  const auto path = spiral_path(spec.amplitude_mm, spec.periods, spec.samples);
  ds.samples.reserve(path.size());

  const Augmentation& aug = spec.augmentation;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (const TendonState& q : path) {
    Sample s;
    s.q = q;
    s.label = map_label(q, spec.label_units);
    s.image = policy_input(render(tip_pose(q, params), scene, cam), spec.image_size);

    // Fixed number of draws per sample keeps the stream aligned whatever is applied.
    const double u_shadow = unit(rng);
    const double gain = aug.shadow_gain_min + (aug.shadow_gain_max - aug.shadow_gain_min) * unit(rng);
    const double u_occ = unit(rng);
    const double uw = unit(rng), uh = unit(rng), ux = unit(rng), uy = unit(rng);

    if (u_shadow < aug.shadow_fraction) {
      s.shadow = true;
      for (double& v : s.image.data) v = std::clamp(v * gain, 0.0, 1.0);
      ++ds.stats.shadowed;
    }
    if (u_occ < aug.occlusion_fraction) {
      const int span = aug.occlusion_max_px - aug.occlusion_min_px + 1;
      const int w = aug.occlusion_min_px + std::min(static_cast<int>(uw * span), span - 1);
      const int h = aug.occlusion_min_px + std::min(static_cast<int>(uh * span), span - 1);
      const int x = std::min(static_cast<int>(ux * (spec.image_size - w + 1)), spec.image_size - w);
      const int y = std::min(static_cast<int>(uy * (spec.image_size - h + 1)), spec.image_size - h);
      fill_rect(s.image, {x, y, w, h});
      s.occluded = true;
      ++ds.stats.occluded;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

namespace {

std::string image_name(std::size_t index) {
  std::ostringstream os;
  os << std::setw(5) << std::setfill('0') << index << ".pgm";
  return os.str();
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir / "images");
  std::ofstream labels(dir / "labels.csv");
  if (!labels) throw std::runtime_error("save_dataset: cannot write " + (dir / "labels.csv").string());
  labels << "index,q1_mm,q2_mm,y1,y2,shadow,occluded\n" << std::setprecision(17);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    write_pnm(dir / "images" / image_name(i), s.image);
    labels << i << ',' << s.q.q1 << ',' << s.q.q2 << ',' << s.label[0] << ',' << s.label[1] << ','
           << (s.shadow ? 1 : 0) << ',' << (s.occluded ? 1 : 0) << '\n';
  }
  if (!labels) throw std::runtime_error("save_dataset: write failed");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream labels(dir / "labels.csv");
  if (!labels) throw std::runtime_error("load_dataset: cannot open " + (dir / "labels.csv").string());
  std::string line;
  std::getline(labels, line);
  if (line != "index,q1_mm,q2_mm,y1,y2,shadow,occluded") {
    throw std::runtime_error("load_dataset: unexpected labels.csv header");
  }
  Dataset ds;
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::size_t index = 0;
    Sample s;
    int shadow = 0, occluded = 0;
    if (!(ls >> index >> s.q.q1 >> s.q.q2 >> s.label[0] >> s.label[1] >> shadow >> occluded)) {
      throw std::runtime_error("load_dataset: malformed row '" + line + "'");
    }
    if (index != ds.samples.size()) throw std::runtime_error("load_dataset: rows out of order");
    s.shadow = shadow != 0;
    s.occluded = occluded != 0;
    s.image = read_pnm(dir / "images" / image_name(index));
    ds.stats.shadowed += s.shadow;
    ds.stats.occluded += s.occluded;
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

void DlbvsGains::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("DlbvsGains: alpha must lie in (0, 1]");
}

TendonState dlbvs_step(const PolicyModel& model, const Image& img, const DlbvsGains& gains) {
  const auto y = forward2(model, img);
  return -gains.alpha * unmap_label(y, gains.label_units);
}

}  // namespace hvs
