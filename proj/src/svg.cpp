#include "natrob/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace natrob::svg {

namespace {

constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

constexpr const char* kPalette[8] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Range {
  double lo, hi;
};

Range nice_range(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi))) return {0.0, 1.0};
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
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

class Canvas {
 public:
  Canvas(const ChartOptions& opt) : opt_(opt) {
    buf_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    buf_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
         << opt.height << "\" viewBox=\"0 0 " << opt.width << " " << opt.height << "\">\n";
    buf_ << "<rect width=\"" << opt.width << "\" height=\"" << opt.height << "\" fill=\"white\"/>\n";
  }

  void set_ranges(Range x, Range y) {
    x_ = x;
    y_ = y;
  }

  double px(double x) const {
    return kMarginLeft + (x - x_.lo) / (x_.hi - x_.lo) * (opt_.width - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    return opt_.height - kMarginBottom -
           (y - y_.lo) / (y_.hi - y_.lo) * (opt_.height - kMarginTop - kMarginBottom);
  }

  void axes() {
    double x0 = kMarginLeft, x1 = opt_.width - kMarginRight;
    double y0 = opt_.height - kMarginBottom, y1 = kMarginTop;
    buf_ << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">"
         << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
         << "\"/><line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
         << "\"/></g>\n";
    // 5 ticks each axis
    for (int i = 0; i <= 5; ++i) {
      double xv = x_.lo + (x_.hi - x_.lo) * i / 5.0;
      double yv = y_.lo + (y_.hi - y_.lo) * i / 5.0;
      double xp = px(xv), yp = py(yv);
      buf_ << "<line x1=\"" << fmt(xp) << "\" y1=\"" << y0 << "\" x2=\"" << fmt(xp) << "\" y2=\""
           << y0 + 5 << "\" stroke=\"#333\"/>\n";
      buf_ << "<text x=\"" << fmt(xp) << "\" y=\"" << y0 + 18
           << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">"
           << format_number(xv) << "</text>\n";
      buf_ << "<line x1=\"" << x0 - 5 << "\" y1=\"" << fmt(yp) << "\" x2=\"" << x0 << "\" y2=\""
           << fmt(yp) << "\" stroke=\"#333\"/>\n";
      buf_ << "<text x=\"" << x0 - 8 << "\" y=\"" << fmt(yp + 4)
           << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
           << format_number(yv) << "</text>\n";
    }
    if (!opt_.title.empty()) {
      buf_ << "<text x=\"" << opt_.width / 2 << "\" y=\"22\" font-size=\"15\" text-anchor=\"middle\""
           << " font-family=\"sans-serif\">" << escape(opt_.title) << "</text>\n";
    }
    if (!opt_.x_label.empty()) {
      buf_ << "<text x=\"" << (kMarginLeft + opt_.width - kMarginRight) / 2 << "\" y=\""
           << opt_.height - 12 << "\" font-size=\"12\" text-anchor=\"middle\""
           << " font-family=\"sans-serif\">" << escape(opt_.x_label) << "</text>\n";
    }
    if (!opt_.y_label.empty()) {
      double cy = (kMarginTop + opt_.height - kMarginBottom) / 2.0;
      buf_ << "<text x=\"16\" y=\"" << fmt(cy) << "\" font-size=\"12\" text-anchor=\"middle\""
           << " font-family=\"sans-serif\" transform=\"rotate(-90 16 " << fmt(cy) << ")\">"
           << escape(opt_.y_label) << "</text>\n";
    }
  }

  static std::string fmt(double v) { return format_number(v); }

  std::ostringstream& out() { return buf_; }

  std::string finish() {
    buf_ << "</svg>\n";
    return buf_.str();
  }

  const ChartOptions& opt() const { return opt_; }
  Range x_range() const { return x_; }
  Range y_range() const { return y_; }

 private:
  ChartOptions opt_;
  Range x_{0, 1}, y_{0, 1};
  std::ostringstream buf_;
};

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string render_chart(const std::vector<Series>& series, const ChartOptions& options) {
  Canvas canvas(options);
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  if (xlo > xhi) {
    xlo = 0;
    xhi = 1;
    ylo = 0;
    yhi = 1;
  }
  if (options.equality_line) {
    double lo = std::min(xlo, ylo), hi = std::max(xhi, yhi);
    xlo = ylo = lo;
    xhi = yhi = hi;
  }
  if (options.y_min) ylo = *options.y_min;
  if (options.y_max) yhi = *options.y_max;
  canvas.set_ranges(nice_range(xlo, xhi), nice_range(ylo, yhi));
  canvas.axes();
  auto& out = canvas.out();

  if (options.equality_line) {
    double lo = std::max(canvas.x_range().lo, canvas.y_range().lo);
    double hi = std::min(canvas.x_range().hi, canvas.y_range().hi);
    out << "<line x1=\"" << Canvas::fmt(canvas.px(lo)) << "\" y1=\"" << Canvas::fmt(canvas.py(lo))
        << "\" x2=\"" << Canvas::fmt(canvas.px(hi)) << "\" y2=\"" << Canvas::fmt(canvas.py(hi))
        << "\" stroke=\"#999\" stroke-dasharray=\"5,4\" id=\"equality-line\"/>\n";
  }

  int ci = 0;
  for (const auto& s : series) {
    std::string color = s.color.empty() ? kPalette[ci % 8] : s.color;
    out << "<g id=\"series-" << escape(s.name) << "\">\n";
    if (s.line && s.points.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : s.points) {
        out << Canvas::fmt(canvas.px(x)) << "," << Canvas::fmt(canvas.py(y)) << " ";
      }
      out << "\"/>\n";
    }
    if (s.markers) {
      for (auto [x, y] : s.points) {
        out << "<circle cx=\"" << Canvas::fmt(canvas.px(x)) << "\" cy=\"" << Canvas::fmt(canvas.py(y))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    out << "</g>\n";
    // legend entry
    int ly = kMarginTop + 6 + 16 * ci;
    out << "<rect x=\"" << options.width - 170 << "\" y=\"" << ly - 9
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>"
        << "<text x=\"" << options.width - 155 << "\" y=\"" << ly
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << escape(s.name) << "</text>\n";
    ++ci;
  }
  return canvas.finish();
}

std::string render_step_chart(const std::vector<std::pair<double, double>>& table,
                              const ChartOptions& options) {
  Canvas canvas(options);
  double xlo = 1e300, xhi = -1e300;
  for (auto [x, y] : table) {
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
  }
  if (xlo > xhi) {
    xlo = 0;
    xhi = 1;
  }
  canvas.set_ranges(nice_range(std::min(0.0, xlo), xhi), nice_range(0.0, 1.0));
  canvas.axes();
  auto& out = canvas.out();
  out << "<g id=\"series-cdf\"><polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  double prev_y = 0.0;
  for (auto [x, y] : table) {
    out << Canvas::fmt(canvas.px(x)) << "," << Canvas::fmt(canvas.py(prev_y)) << " ";
    out << Canvas::fmt(canvas.px(x)) << "," << Canvas::fmt(canvas.py(y)) << " ";
    prev_y = y;
  }
  out << "\"/></g>\n";
  return canvas.finish();
}

std::string render_heatmap(const std::vector<std::string>& labels,
                           const std::vector<std::vector<std::optional<double>>>& values,
                           const std::string& title) {
  const size_t n = labels.size();
  const int cell = 42;
  const int left = 150, top = 60;
  const int width = left + cell * static_cast<int>(n) + 30;
  const int height = top + cell * static_cast<int>(n) + 150;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << width / 2 << "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\""
        << " font-family=\"sans-serif\">" << escape(title) << "</text>\n";
  }
  for (size_t i = 0; i < n; ++i) {
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + cell * i + cell / 2 + 4
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << escape(labels[i])
        << "</text>\n";
    double cx = left + cell * i + cell / 2.0;
    double cy = top + cell * n + 10;
    out << "<text x=\"" << format_number(cx) << "\" y=\"" << format_number(cy)
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\""
        << " transform=\"rotate(-55 " << format_number(cx) << " " << format_number(cy) << ")\">"
        << escape(labels[i]) << "</text>\n";
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      int x = left + cell * static_cast<int>(j);
      int y = top + cell * static_cast<int>(i);
      std::string fill = "#cccccc";
      std::string text;
      if (values[i][j]) {
        double v = std::clamp(*values[i][j], -1.0, 1.0);
        // blue (-1) .. white (0) .. red (+1)
        int r = static_cast<int>(std::lround(255 * (v > 0 ? 1.0 : 1.0 + v)));
        int b = static_cast<int>(std::lround(255 * (v < 0 ? 1.0 : 1.0 - v)));
        int g = static_cast<int>(std::lround(255 * (1.0 - std::fabs(v))));
        char c[16];
        std::snprintf(c, sizeof(c), "#%02x%02x%02x", r, g, b);
        fill = c;
        char t[16];
        std::snprintf(t, sizeof(t), "%.2f", v);
        text = t;
      } else {
        text = "n/a";
      }
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << fill << "\" stroke=\"#888\"/>\n";
      out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">" << text
          << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace natrob::svg
