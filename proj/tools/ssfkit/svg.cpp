#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ssfcli::svg {

namespace {

constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 40, kB = 70;
const char* const kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
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

struct Range {
  double lo, hi;
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Range padded(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {-1.0, 1.0};
  if (hi - lo < 1e-12) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void open(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
    << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kW / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
}

void axes(std::ostringstream& o, const Range& x, const Range& y, const std::string& xlabel, const std::string& ylabel,
          bool x_ticks) {
  const double x0 = kL, x1 = kW - kR, y0 = kH - kB, y1 = kT;
  o << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y0)
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y1)
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = y.lo + (y.hi - y.lo) * t / 4.0;
    const double py = y.map(v, y0, y1);
    o << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(py) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(py)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
    if (x_ticks) {
      const double u = x.lo + (x.hi - x.lo) * t / 4.0;
      const double px = x.map(u, x0, x1);
      o << "<line x1=\"" << num(px) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px) << "\" y2=\"" << num(y0 + 4)
        << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << num(px) << "\" y=\"" << num(y0 + 16) << "\" text-anchor=\"middle\">" << num(u)
        << "</text>\n";
    }
  }
  if (y.lo < 0.0 && y.hi > 0.0) {
    const double pz = y.map(0.0, y0, y1);
    o << "<line x1=\"" << num(x0) << "\" y1=\"" << num(pz) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(pz)
      << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  o << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kH - 12) << "\" text-anchor=\"middle\">"
    << escape(xlabel) << "</text>\n";
  o << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num((y0 + y1) / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

}  // namespace

std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars) {
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    for (double v : {b.value, b.lo.value_or(b.value), b.hi.value_or(b.value)}) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const Range y = padded(lo, hi);
  std::ostringstream o;
  open(o, title);
  axes(o, {0.0, 1.0}, y, "", ylabel, false);
  const double x0 = kL, x1 = kW - kR, y0 = kH - kB, y1 = kT;
  const double slot = bars.empty() ? 0.0 : (x1 - x0) / static_cast<double>(bars.size());
  const double base = y.map(std::clamp(0.0, y.lo, y.hi), y0, y1);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
    const double top = std::isfinite(b.value) ? y.map(b.value, y0, y1) : base;
    o << "<rect x=\"" << num(cx - 0.35 * slot) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
      << num(0.7 * slot) << "\" height=\"" << num(std::abs(base - top)) << "\" fill=\"" << kPalette[0] << "\"/>\n";
    if (b.lo && b.hi && std::isfinite(*b.lo) && std::isfinite(*b.hi)) {
      const double pl = y.map(*b.lo, y0, y1), ph = y.map(*b.hi, y0, y1);
      o << "<line x1=\"" << num(cx) << "\" y1=\"" << num(pl) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(ph)
        << "\" stroke=\"black\"/>\n";
      for (double p : {pl, ph})
        o << "<line x1=\"" << num(cx - 0.12 * slot) << "\" y1=\"" << num(p) << "\" x2=\"" << num(cx + 0.12 * slot)
          << "\" y2=\"" << num(p) << "\" stroke=\"black\"/>\n";
    }
    o << "<text x=\"" << num(cx) << "\" y=\"" << num(y0 + 14) << "\" text-anchor=\"end\" transform=\"rotate(-40 "
      << num(cx) << ' ' << num(y0 + 14) << ")\">" << escape(b.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<double>& x, const std::vector<double>& y) {
  const auto [xmin, xmax] = x.empty() ? std::pair{0.0, 1.0} : std::pair{*std::min_element(x.begin(), x.end()),
                                                                         *std::max_element(x.begin(), x.end())};
  const auto [ymin, ymax] = y.empty() ? std::pair{0.0, 1.0} : std::pair{*std::min_element(y.begin(), y.end()),
                                                                         *std::max_element(y.begin(), y.end())};
  const Range rx = padded(xmin, xmax), ry = padded(ymin, ymax);
  std::ostringstream o;
  open(o, title);
  axes(o, rx, ry, xlabel, ylabel, true);
  const double x0 = kL, x1 = kW - kR, y0 = kH - kB, y1 = kT;
  o << "<polyline fill=\"none\" stroke=\"" << kPalette[1] << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    o << (i ? " " : "") << num(rx.map(x[i], x0, x1)) << ',' << num(ry.map(y[i], y0, y1));
  o << "\"/>\n";
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    o << "<circle cx=\"" << num(rx.map(x[i], x0, x1)) << "\" cy=\"" << num(ry.map(y[i], y0, y1))
      << "\" r=\"2.5\" fill=\"" << kPalette[1] << "\"/>\n";
  o << "</svg>\n";
  return o.str();
}

std::string biplot(const std::string& title, const std::vector<Point>& points, const std::vector<Arrow>& arrows) {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  // Arrows are rescaled so the longest reaches the extent of the points.
  double longest = 0.0, extent = 0.0;
  for (const auto& a : arrows) longest = std::max(longest, std::hypot(a.u, a.v));
  for (const auto& p : points) extent = std::max(extent, std::hypot(p.x, p.y));
  const double scale = longest > 0.0 ? (extent > 0.0 ? extent : 1.0) / longest : 0.0;
  for (const auto& a : arrows) {
    xmin = std::min(xmin, a.u * scale);
    xmax = std::max(xmax, a.u * scale);
    ymin = std::min(ymin, a.v * scale);
    ymax = std::max(ymax, a.v * scale);
  }
  const Range rx = padded(xmin, xmax), ry = padded(ymin, ymax);
  std::ostringstream o;
  open(o, title);
  axes(o, rx, ry, "dimension 1", "dimension 2", true);
  const double x0 = kL, x1 = kW - kR, y0 = kH - kB, y1 = kT;
  const double ox = rx.map(0.0, x0, x1), oy = ry.map(0.0, y0, y1);
  for (const auto& a : arrows) {
    const double ex = rx.map(a.u * scale, x0, x1), ey = ry.map(a.v * scale, y0, y1);
    o << "<line x1=\"" << num(ox) << "\" y1=\"" << num(oy) << "\" x2=\"" << num(ex) << "\" y2=\"" << num(ey)
      << "\" stroke=\"#444\" stroke-width=\"1.5\"/>\n";
    o << "<text x=\"" << num(ex) << "\" y=\"" << num(ey - 4) << "\" text-anchor=\"middle\" fill=\"#444\">"
      << escape(a.label) << "</text>\n";
  }
  for (const auto& p : points) {
    const char* colour = p.group >= 0 ? kPalette[p.group % 8] : "#333";
    const double px = rx.map(p.x, x0, x1), py = ry.map(p.y, y0, y1);
    o << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"4\" fill=\"" << colour << "\"/>\n";
    o << "<text x=\"" << num(px + 6) << "\" y=\"" << num(py + 4) << "\">" << escape(p.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ssfcli::svg
