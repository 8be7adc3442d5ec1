#include "dbsom/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace dbsom {

namespace {

constexpr double kPxPerUnit = 60.0;
constexpr double kMargin = 0.3;       // grid units around the hexagons
constexpr double kTitleBand = 0.7;    // grid units reserved for the title
const double kHexRadius = 1.0 / std::sqrt(3.0);  // unit horizontal pitch

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

std::string fill_color(double t) {
  // white (#f7fbff) to dark blue (#08306b)
  const int r0 = 0xf7, g0 = 0xfb, b0 = 0xff;
  const int r1 = 0x08, g1 = 0x30, b1 = 0x6b;
  const auto mixc = [&](int a, int b) {
    return static_cast<int>(std::lround(a + t * (b - a)));
  };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mixc(r0, r1), mixc(g0, g1),
                mixc(b0, b1));
  return buf;
}

}  // namespace

std::string render_hex_map(const MapGrid& grid, const Eigen::VectorXd& values,
                           const std::string& title, bool log_scale) {
  const Index m = grid.size();
  if (values.size() != m)
    throw_error(ErrorCode::DimensionMismatch, "one value per neuron required");
  if (!values.allFinite())
    throw_error(ErrorCode::NonFiniteInput, "map values must be finite");
  if (log_scale && (values.array() <= 0.0).any())
    throw_error(ErrorCode::InvariantViolation,
                "log color scale needs positive values");

  Eigen::VectorXd scale = log_scale ? values.array().log().matrix() : values;
  const double lo = scale.minCoeff();
  const double hi = scale.maxCoeff();
  const bool flat = hi - lo <= 0.0;

  bool whole = true;
  for (Index i = 0; i < m; ++i)
    if (values[i] != std::floor(values[i])) whole = false;

  // Content bounds in grid units (centers plus the hexagon extents).
  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  for (Index i = 0; i < m; ++i) {
    const Eigen::Vector2d c = grid.position(i);
    min_x = std::min(min_x, c.x());
    max_x = std::max(max_x, c.x());
    min_y = std::min(min_y, c.y());
    max_y = std::max(max_y, c.y());
  }
  min_x -= 0.5 + kMargin;
  max_x += 0.5 + kMargin;
  min_y -= kHexRadius + kMargin + (title.empty() ? 0.0 : kTitleBand);
  max_y += kHexRadius + kMargin;

  const double width = (max_x - min_x) * kPxPerUnit;
  const double height = (max_y - min_y) * kPxPerUnit;
  const auto px = [&](double x) { return (x - min_x) * kPxPerUnit; };
  const auto py = [&](double y) { return (y - min_y) * kPxPerUnit; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt("%.0f", width) + "\" height=\"" + fmt("%.0f", height) +
         "\" viewBox=\"0 0 " + fmt("%.0f", width) + " " + fmt("%.0f", height) +
         "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + fmt("%.1f", px((min_x + max_x) / 2.0)) + "\" y=\"" +
           fmt("%.1f", py(0.0 - kHexRadius - kMargin - kTitleBand / 2.5)) +
           "\" font-family=\"sans-serif\" font-size=\"" +
           fmt("%.0f", 0.38 * kPxPerUnit) +
           "\" text-anchor=\"middle\">" + escape_xml(title) + "</text>\n";
  }

  for (Index i = 0; i < m; ++i) {
    const Eigen::Vector2d c = grid.position(i);
    std::string points;
    for (int k = 0; k < 6; ++k) {
      const double angle = (30.0 + 60.0 * k) * M_PI / 180.0;
      if (k) points += " ";
      points += fmt("%.2f", px(c.x() + kHexRadius * std::cos(angle))) + "," +
                fmt("%.2f", py(c.y() + kHexRadius * std::sin(angle)));
    }
    const double t = flat ? 0.5 : (scale[i] - lo) / (hi - lo);
    const std::string label =
        whole ? fmt("%.0f", values[i]) : fmt("%.3g", values[i]);
    svg += "<polygon points=\"" + points + "\" fill=\"" + fill_color(t) +
           "\" stroke=\"#666666\" stroke-width=\"1\"><title>neuron " +
           std::to_string(i) + ": " + escape_xml(label) + "</title></polygon>\n";
    svg += "<text x=\"" + fmt("%.2f", px(c.x())) + "\" y=\"" +
           fmt("%.2f", py(c.y()) + 0.1 * kPxPerUnit) +
           "\" font-family=\"sans-serif\" font-size=\"" +
           fmt("%.0f", 0.28 * kPxPerUnit) + "\" text-anchor=\"middle\" fill=\"" +
           (t > 0.55 ? "white" : "#1a1a1a") + "\">" + escape_xml(label) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace dbsom
