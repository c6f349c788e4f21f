#include "homctl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "homctl/io.hpp"

namespace homctl {

namespace {

constexpr double kWidth = 800;
constexpr double kPanelHeight = 260;
constexpr double kTitleHeight = 30;
constexpr double kLeft = 70, kRight = 20, kTop = 20, kBottom = 30;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Indices kept after decimation: an even stride plus every row whose time
// repeats (the pre/post rows of an event) and the last row.
std::vector<std::size_t> decimate(const std::vector<double>& t, std::size_t max_points) {
  std::vector<std::size_t> keep;
  const std::size_t n = t.size();
  const std::size_t cap = std::max<std::size_t>(max_points, 1);
  const std::size_t stride = std::max<std::size_t>(1, (n + cap - 1) / cap);
  for (std::size_t k = 0; k < n; ++k) {
    const bool repeated = (k > 0 && t[k] == t[k - 1]) || (k + 1 < n && t[k + 1] == t[k]);
    if (k % stride == 0 || repeated || k + 1 == n) keep.push_back(k);
  }
  return keep;
}

double transform(double y, bool log10) {
  if (!log10) return y;
  return y > 0 ? std::log10(y) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  if (spec.t.empty()) throw std::invalid_argument("render_svg: empty time axis");
  const double height = kTitleHeight + spec.panels.size() * kPanelHeight;
  const double t0 = spec.t.front();
  double t1 = spec.t.back();
  if (!(t1 > t0)) t1 = t0 + 1;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kPanelHeight - kTop - kBottom;
  auto px = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * plot_w; };

  const std::vector<std::size_t> keep = decimate(spec.t, spec.max_points);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
         "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " +
         fmt(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(kWidth / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(spec.title) + "</text>\n";

  for (std::size_t p = 0; p < spec.panels.size(); ++p) {
    const PlotPanel& panel = spec.panels[p];
    const double y_off = kTitleHeight + p * kPanelHeight;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : panel.series) {
      for (std::size_t k : keep) {
        const double v = transform(s.y[k], panel.log10);
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    if (!std::isfinite(lo)) {
      lo = -1;
      hi = 1;
    } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 1;
      hi += 1;
    }
    auto py = [&](double v) { return y_off + kTop + (hi - v) / (hi - lo) * plot_h; };

    svg += "<g class=\"panel\" data-ylabel=\"" + escape(panel.ylabel) + "\" data-log10=\"" +
           (panel.log10 ? "true" : "false") + "\">\n";
    svg += "<rect class=\"frame\" x=\"" + fmt(kLeft) + "\" y=\"" + fmt(y_off + kTop) +
           "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "<text x=\"10\" y=\"" + fmt(y_off + kTop + plot_h / 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(panel.ylabel) +
           "</text>\n";
    svg += "<text x=\"" + fmt(kLeft - 5) + "\" y=\"" + fmt(y_off + kTop + 10) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           label_number(hi) + "</text>\n";
    svg += "<text x=\"" + fmt(kLeft - 5) + "\" y=\"" + fmt(y_off + kTop + plot_h) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           label_number(lo) + "</text>\n";
    svg += "<text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(y_off + kPanelHeight - 10) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + label_number(t0) +
           " s</text>\n";
    svg += "<text x=\"" + fmt(kLeft + plot_w) + "\" y=\"" + fmt(y_off + kPanelHeight - 10) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           label_number(t1) + " s</text>\n";

    for (double m : spec.markers) {
      svg += "<line class=\"jump-marker\" x1=\"" + fmt(px(m)) + "\" y1=\"" +
             fmt(y_off + kTop) + "\" x2=\"" + fmt(px(m)) + "\" y2=\"" +
             fmt(y_off + kTop + plot_h) +
             "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    }

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const PlotSeries& series = panel.series[s];
      std::string points;
      for (std::size_t k : keep) {
        const double v = transform(series.y[k], panel.log10);
        if (!std::isfinite(v)) continue;
        if (!points.empty()) points += ' ';
        points += fmt(px(spec.t[k])) + "," + fmt(py(v));
      }
      svg += "<polyline class=\"series\" data-label=\"" + escape(series.label) +
             "\" fill=\"none\" stroke=\"" + kColors[s % 5] + "\" stroke-width=\"1.2\" points=\"" +
             points + "\"/>\n";
      svg += "<text x=\"" + fmt(kLeft + plot_w - 5) + "\" y=\"" +
             fmt(y_off + kTop + 14 + 14 * s) + "\" text-anchor=\"end\" fill=\"" +
             kColors[s % 5] + "\" font-family=\"sans-serif\" font-size=\"11\">" +
             escape(series.label) + "</text>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

const char* to_string(PlotChannel channel) {
  switch (channel) {
    case PlotChannel::theta_e: return "theta_e";
    case PlotChannel::omega_tilde: return "omega_tilde";
    case PlotChannel::homnorm: return "homnorm";
  }
  return "unknown";
}

PlotSpec plot_spec(const TrackingRecord& rec, PlotChannel channel) {
  PlotSpec spec;
  spec.t = rec.t;
  for (const auto& ev : rec.events) spec.markers.push_back(ev.t);
  const std::size_t n = rec.size();

  auto components = [&](const std::string& stem, auto value) {
    PlotPanel lin{stem, false, {}};
    PlotPanel lg{"log10 ||" + stem + "||", true, {{"||" + stem + "||", {}}}};
    for (int i = 0; i < 3; ++i) lin.series.push_back({stem + "_" + std::to_string(i + 1), {}});
    for (std::size_t k = 0; k < n; ++k) {
      const Vector3d v = value(k);
      for (int i = 0; i < 3; ++i) lin.series[i].y.push_back(v(i));
      lg.series[0].y.push_back(v.norm());
    }
    spec.panels.push_back(std::move(lin));
    spec.panels.push_back(std::move(lg));
  };

  switch (channel) {
    case PlotChannel::theta_e:
      spec.title = "Attitude error theta_e (rad)";
      components("theta_e", [&](std::size_t k) { return rec.theta[k]; });
      break;
    case PlotChannel::omega_tilde:
      spec.title = "Angular velocity error omega_d - omega (rad/s)";
      components("omega_tilde",
                 [&](std::size_t k) { return Vector3d(rec.omega_d[k] - rec.omega[k]); });
      break;
    case PlotChannel::homnorm: {
      spec.title = "Canonical homogeneous norm ||xi||_d";
      spec.panels.push_back({"||xi||_d", false, {{"||xi||_d", rec.homnorm}}});
      spec.panels.push_back({"log10 ||xi||_d", true, {{"||xi||_d", rec.homnorm}}});
      break;
    }
  }
  return spec;
}

PlotSpec plot_spec(const SimRecord& rec) {
  PlotSpec spec;
  spec.title = "Impulsive closed loop";
  spec.t = rec.t;
  for (const auto& ev : rec.events) spec.markers.push_back(ev.t);
  PlotPanel states{"x", false, {}};
  const Eigen::Index N = rec.x.empty() ? 0 : rec.x.front().size();
  for (Eigen::Index i = 0; i < N; ++i) {
    PlotSeries s{"x_" + std::to_string(i + 1), {}};
    for (const auto& x : rec.x) s.y.push_back(x(i));
    states.series.push_back(std::move(s));
  }
  spec.panels.push_back(std::move(states));
  spec.panels.push_back({"||x||_d", false, {{"||x||_d", rec.homnorm}}});
  spec.panels.push_back({"log10 ||x||_d", true, {{"||x||_d", rec.homnorm}}});
  return spec;
}

void emit_plot(const TrackingRecord& rec, PlotChannel channel,
               const std::filesystem::path& path) {
  if (rec.size() == 0) throw std::invalid_argument("emit_plot: empty record");
  write_text(path, render_svg(plot_spec(rec, channel)));
}

void emit_plot(const SimRecord& rec, const std::filesystem::path& path) {
  if (rec.size() == 0) throw std::invalid_argument("emit_plot: empty record");
  write_text(path, render_svg(plot_spec(rec)));
}

}  // namespace homctl
