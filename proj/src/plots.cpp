#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hvs/harness.hpp"

namespace hvs {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 320.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 45.0;

struct Series {
  std::string label;
  std::string color;
  std::vector<double> values;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  explicit Svg(const std::string& title) {
    os_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
        << "</text>\n";
  }

  std::ostringstream& body() { return os_; }

  void save(const std::filesystem::path& path) {
    os_ << "</svg>\n";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_plots: cannot write " + path.string());
    out << os_.str();
  }

 private:
  std::ostringstream os_;
};

double plot_w() { return kWidth - kLeft - kRight; }
double plot_h() { return kHeight - kTop - kBottom; }

void frame_and_x_axis(Svg& svg, int n, const std::string& y_label) {
  auto& os = svg.body();
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w() << "\" height=\"" << plot_h()
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double y = kTop + plot_h();
  os << "<text x=\"" << kLeft << "\" y=\"" << y + 15 << "\" text-anchor=\"middle\">1</text>\n";
  os << "<text x=\"" << kLeft + plot_w() << "\" y=\"" << y + 15 << "\" text-anchor=\"middle\">" << n << "</text>\n";
  os << "<text x=\"" << kLeft + plot_w() / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\">iteration</text>\n";
  os << "<text x=\"14\" y=\"" << kTop + plot_h() / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << kTop + plot_h() / 2 << ")\">" << escape(y_label) << "</text>\n";
}

double x_of(std::size_t i, std::size_t n) {
  return kLeft + (n > 1 ? plot_w() * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
}

void line_chart(const std::filesystem::path& path, const std::string& title, const std::string& y_label,
                const std::vector<Series>& series, const std::vector<std::pair<double, std::string>>& guides = {}) {
  double lo = INFINITY, hi = -INFINITY;
  std::size_t n = 0;
  for (const auto& s : series) {
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    n = std::max(n, s.values.size());
  }
  for (const auto& g : guides) {
    lo = std::min(lo, g.first);
    hi = std::max(hi, g.first);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = hi = 0.0;
  if (hi - lo < 1e-12) {
    const double pad = std::max(std::abs(hi) * 0.1, 1e-3);
    lo -= pad;
    hi += pad;
  }
  auto y_of = [&](double v) { return kTop + plot_h() * (hi - v) / (hi - lo); };

  Svg svg(title);
  frame_and_x_axis(svg, static_cast<int>(n), y_label);
  auto& os = svg.body();
  os << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + 4 << "\" text-anchor=\"end\">" << num(hi) << "</text>\n";
  os << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + plot_h() << "\" text-anchor=\"end\">" << num(lo)
     << "</text>\n";
  for (const auto& [v, color] : guides) {
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w() << "\" y1=\"" << y_of(v) << "\" y2=\"" << y_of(v)
       << "\" stroke=\"" << color << "\" stroke-dasharray=\"4 3\"/>\n";
  }
  double legend_x = kLeft + 8;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      os << (i ? " " : "") << num(x_of(i, n)) << ',' << num(y_of(s.values[i]));
    }
    os << "\"/>\n";
    os << "<text x=\"" << legend_x << "\" y=\"" << kTop + 14 << "\" fill=\"" << s.color << "\">" << escape(s.label)
       << "</text>\n";
    legend_x += 12.0 + 7.0 * static_cast<double>(s.label.size());
  }
  svg.save(path);
}

void mode_chart(const std::filesystem::path& path, const RunLog& log) {
  const std::size_t n = log.records.size();
  Svg svg("controller mode");
  frame_and_x_axis(svg, static_cast<int>(n), "mode");
  auto& os = svg.body();
  const double step = n > 0 ? plot_w() / static_cast<double>(n) : 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && log.records[j].mode == log.records[i].mode) ++j;
    const bool ibvs = log.records[i].mode == ControllerMode::IBVS;
    os << "<rect class=\"" << to_string(log.records[i].mode) << "\" x=\"" << num(kLeft + step * i) << "\" y=\""
       << kTop << "\" width=\"" << num(step * (j - i)) << "\" height=\"" << plot_h() << "\" fill=\""
       << (ibvs ? "#4c78a8" : "#f58518") << "\"><title>" << to_string(log.records[i].mode) << ' ' << i + 1 << '-'
       << j << "</title></rect>\n";
    i = j;
  }
  os << "<text x=\"" << kLeft + 8 << "\" y=\"" << kTop - 6 << "\" fill=\"#4c78a8\">IBVS</text>\n";
  os << "<text x=\"" << kLeft + 48 << "\" y=\"" << kTop - 6 << "\" fill=\"#f58518\">DLBVS</text>\n";
  svg.save(path);
}

}  // namespace

void emit_plots(const RunLog& log, const std::filesystem::path& out_dir, double convergence_sad) {
  std::filesystem::create_directories(out_dir);
  Series sad{"SAD", "#333333", {}}, q1{"q1", "#e45756", {}}, q2{"q2", "#4c78a8", {}};
  Series dq1{"dq1", "#e45756", {}}, dq2{"dq2", "#4c78a8", {}};
  for (const auto& r : log.records) {
    sad.values.push_back(r.sad);
    q1.values.push_back(r.q1_mm);
    q2.values.push_back(r.q2_mm);
    dq1.values.push_back(r.dq1_mm);
    dq2.values.push_back(r.dq2_mm);
  }
  line_chart(out_dir / "sad.svg", "SAD vs iteration", "SAD", {sad}, {{convergence_sad, "#54a24b"}});
  line_chart(out_dir / "q.svg", "tendon displacement", "q (mm)", {q1, q2});
  line_chart(out_dir / "dq.svg", "tendon increment", "dq (mm)", {dq1, dq2});
  mode_chart(out_dir / "mode.svg", log);
}

}  // namespace hvs
