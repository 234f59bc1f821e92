#include "gif/svg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gif/csv.hpp"

namespace gif {

namespace {

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void write_scatter_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<double>& xs,
                       const std::vector<double>& ys, const std::optional<FitReport>& fit) {
  constexpr double W = 480, H = 360, L = 60, R = 20, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    if (!any) {
      x0 = x1 = xs[i];
      y0 = y1 = ys[i];
      any = true;
    }
    x0 = std::min(x0, xs[i]);
    x1 = std::max(x1, xs[i]);
    y0 = std::min(y0, ys[i]);
    y1 = std::max(y1, ys[i]);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(xlabel)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << H / 2 << ")\">" << escape(ylabel) << "</text>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt(x0) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt(x1) << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << fmt(y0) << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">" << fmt(y1) << "</text>\n";
  if (fit) {
    os << "<line x1=\"" << px(x0) << "\" y1=\"" << py(fit->intercept + fit->slope * x0) << "\" x2=\""
       << px(x1) << "\" y2=\"" << py(fit->intercept + fit->slope * x1)
       << "\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" fill=\"#c33\">R^2 = "
       << fmt(fit->r_squared) << "</text>\n";
  }
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i]) << "\" r=\"3\" fill=\"#236\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace gif
