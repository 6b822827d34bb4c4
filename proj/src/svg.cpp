#include "infotraj/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "infotraj/errors.hpp"

namespace infotraj::svg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf) == "-0.00" ? "0.00" : buf;
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

struct Column {
  int index = -1;  // -1: time
  std::string label;
};

std::pair<Column, Column> plane_of(const dynamics::Trajectory& t) {
  const auto& n = t.state_names;
  const auto X = std::find(n.begin(), n.end(), "X");
  const auto Y = std::find(n.begin(), n.end(), "Y");
  if (X != n.end() && Y != n.end()) {
    return {{int(X - n.begin()), "X (m)"}, {int(Y - n.begin()), "Y (m)"}};
  }
  if (n.empty()) throw InputError("trajectory has no state columns");
  return {{-1, "time (s)"}, {0, n.front()}};
}

double value(const dynamics::TrajectorySample& s, const Column& c) {
  return c.index < 0 ? s.s : s.x[c.index];
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

Ellipse confidence_ellipse(const sensing::GaussianPrior& prior, double chi2) {
  if (prior.dim() != 2) throw DimensionError("confidence ellipse needs a 2-D prior");
  prior.check();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(prior.cov.topLeftCorner<2, 2>());
  const Eigen::Vector2d ev = es.eigenvalues();  // ascending
  const Eigen::Vector2d major = es.eigenvectors().col(1);
  Ellipse e;
  e.cx = prior.mean[0];
  e.cy = prior.mean[1];
  e.rx = std::sqrt(chi2 * ev[1]);
  e.ry = std::sqrt(chi2 * ev[0]);
  e.angle_deg = std::abs(ev[1] - ev[0]) <= 1e-12 * ev[1]
                    ? 0.0
                    : std::atan2(major[1], major[0]) * 180.0 / dynamics::kPi;
  return e;
}

std::string render(const Figure& fig) {
  if (fig.paths.empty() && !fig.prior) throw InputError("nothing to plot");
  Column cx, cy;
  if (!fig.paths.empty()) std::tie(cx, cy) = plane_of(fig.paths.front());
  else cx = {0, "X (m)"}, cy = {1, "Y (m)"};
  for (const auto& p : fig.paths) {
    const auto [ax, ay] = plane_of(p);
    if (ax.index != cx.index || ay.index != cy.index) {
      throw InputError("trajectories do not share the same state columns");
    }
  }

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  auto extend = [&](double x, double y) {
    lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
  };
  for (const auto& p : fig.paths)
    for (const auto& s : p.samples) extend(value(s, cx), value(s, cy));
  std::optional<Ellipse> ell;
  if (fig.prior && cx.index == 0 && cy.index == 1) {
    ell = confidence_ellipse(*fig.prior);
    const double r = std::max(ell->rx, ell->ry);
    extend(ell->cx - r, ell->cy - r);
    extend(ell->cx + r, ell->cy + r);
  }
  const bool equal_aspect = cx.index >= 0;
  double span_x = std::max(hi_x - lo_x, 1e-9), span_y = std::max(hi_y - lo_y, 1e-9);
  if (equal_aspect) {
    const double span = std::max(span_x, span_y);
    lo_x -= 0.5 * (span - span_x), lo_y -= 0.5 * (span - span_y);
    span_x = span_y = span;
  }
  lo_x -= 0.05 * span_x, lo_y -= 0.05 * span_y;
  span_x *= 1.1, span_y *= 1.1;

  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = fig.width - left - right, ph = fig.height - top - bottom;
  double sx = pw / span_x, sy = ph / span_y;
  if (equal_aspect) sx = sy = std::min(sx, sy);
  auto px = [&](double x) { return left + (x - lo_x) * sx; };
  auto py = [&](double y) { return top + ph - (y - lo_y) * sy; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fig.width << "\" height=\""
     << fig.height << "\" viewBox=\"0 0 " << fig.width << ' ' << fig.height << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fig.width << "\" height=\"" << fig.height
     << "\" fill=\"white\"/>\n";
  if (!fig.title.empty()) {
    os << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"15\">" << escape(fig.title) << "</text>\n";
  }

  os << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  os << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
     << "\" height=\"" << fmt(ph) << "\"/>\n";
  os << "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const double step_x = nice_step(span_x, 6), step_y = nice_step(span_y, 6);
  for (double t = std::ceil(lo_x / step_x) * step_x; t <= lo_x + span_x; t += step_x) {
    os << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(px(t))
       << "\" y2=\"" << fmt(top + ph + 5) << "\" stroke=\"black\"/>"
       << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(top + ph + 18)
       << "\" text-anchor=\"middle\">" << fmt(std::abs(t) < 1e-9 * step_x ? 0.0 : t).c_str()
       << "</text>\n";
  }
  for (double t = std::ceil(lo_y / step_y) * step_y; t <= lo_y + span_y; t += step_y) {
    os << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << fmt(left)
       << "\" y2=\"" << fmt(py(t)) << "\" stroke=\"black\"/>"
       << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(py(t) + 4)
       << "\" text-anchor=\"end\">" << fmt(std::abs(t) < 1e-9 * step_y ? 0.0 : t) << "</text>\n";
  }
  os << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(fig.height - 12.0)
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(cx.label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
     << "transform=\"rotate(-90 16 " << fmt(top + ph / 2) << ")\">" << escape(cy.label)
     << "</text>\n</g>\n";

  if (ell) {
    os << "<ellipse class=\"prior\" cx=\"" << fmt(px(ell->cx)) << "\" cy=\"" << fmt(py(ell->cy))
       << "\" rx=\"" << fmt(ell->rx * sx) << "\" ry=\"" << fmt(ell->ry * sy)
       << "\" transform=\"rotate(" << fmt(-ell->angle_deg) << ' ' << fmt(px(ell->cx)) << ' '
       << fmt(py(ell->cy)) << ")\" fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\" "
       << "stroke-dasharray=\"6 4\" data-rx-m=\"" << fmt(ell->rx) << "\" data-ry-m=\""
       << fmt(ell->ry) << "\"/>\n";
  }
  for (const auto& p : fig.paths) {
    os << "<polyline class=\"trajectory\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" "
          "points=\"";
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      os << (i ? " " : "") << fmt(px(value(p.samples[i], cx))) << ','
         << fmt(py(value(p.samples[i], cy)));
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace infotraj::svg
