#pragma once

// Dependency-free SVG line plots of closed-loop records.

#include <filesystem>
#include <string>
#include <vector>

#include "homctl/attitude.hpp"
#include "homctl/impulsive.hpp"

namespace homctl {

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

struct PlotPanel {
  std::string ylabel;
  bool log10 = false;  ///< plot log10(y); non-positive samples are skipped
  std::vector<PlotSeries> series;
};

struct PlotSpec {
  std::string title;
  std::vector<double> t;
  std::vector<PlotPanel> panels;
  std::vector<double> markers;  ///< event times, drawn as class="jump-marker"
  std::size_t max_points = 2000;
};

std::string render_svg(const PlotSpec& spec);

enum class PlotChannel { theta_e, omega_tilde, homnorm };

const char* to_string(PlotChannel channel);

/// theta_e: components and log10 ||theta_e||; omega_tilde: components of
/// omega_d - omega and log10 of its norm; homnorm: ||xi||_d and its log10.
PlotSpec plot_spec(const TrackingRecord& rec, PlotChannel channel);
PlotSpec plot_spec(const SimRecord& rec);

/// Throws std::invalid_argument for an empty record.
void emit_plot(const TrackingRecord& rec, PlotChannel channel,
               const std::filesystem::path& path);
void emit_plot(const SimRecord& rec, const std::filesystem::path& path);

}  // namespace homctl
