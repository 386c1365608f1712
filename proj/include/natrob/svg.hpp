#pragma once

#include <optional>
#include <string>
#include <vector>

namespace natrob::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool line = true;     // connect points
  bool markers = true;  // draw circles
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
  bool equality_line = false;  // y = x reference
  std::optional<double> y_min;
  std::optional<double> y_max;
};

// Deterministic self-contained SVG; same inputs give byte-identical output.
std::string render_chart(const std::vector<Series>& series, const ChartOptions& options);

// Step plot of a (threshold, fraction) table.
std::string render_step_chart(const std::vector<std::pair<double, double>>& table,
                              const ChartOptions& options);

// Symmetric matrix heatmap; cells without a value render hatched gray.
std::string render_heatmap(const std::vector<std::string>& labels,
                           const std::vector<std::vector<std::optional<double>>>& values,
                           const std::string& title);

std::string format_number(double v);

}  // namespace natrob::svg
