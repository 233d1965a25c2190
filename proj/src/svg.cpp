#include "bsmix/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "bsmix/error.hpp"

namespace bsmix::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 56.0;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Bounds {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void include(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  void pad(double frac) {
    if (!std::isfinite(xmin)) *this = {0.0, 1.0, 0.0, 1.0};
    const double dx = std::max(xmax - xmin, 1e-9);
    const double dy = std::max(ymax - ymin, 1e-9);
    xmin -= frac * dx;
    xmax += frac * dx;
    ymin -= frac * dy;
    ymax += frac * dy;
  }
};

std::string header(const std::string& title) {
  return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2:.1f}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2.0, escape(title));
}

std::string axis_frame(double x0, double y0, double x1, double y1) {
  return fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
      "stroke=\"#444\" stroke-width=\"1\"/>\n",
      x0, y0, x1 - x0, y1 - y0);
}

}  // namespace

std::string scatter(std::span<const ToySample> samples,
                    std::span<const GaussianMixtureConcept> concepts, const std::string& title) {
  Bounds b;
  for (const auto& c : concepts) {
    for (std::size_t k = 0; k < c.components(); ++k) {
      const double sx = std::sqrt(c.covariances[k](0, 0));
      const double sy = c.dim() > 1 ? std::sqrt(c.covariances[k](1, 1)) : sx;
      const double my = c.dim() > 1 ? c.means[k][1] : 0.0;
      b.include(c.means[k][0] - 2.5 * sx, my - 2.5 * sy);
      b.include(c.means[k][0] + 2.5 * sx, my + 2.5 * sy);
    }
  }
  for (const auto& s : samples) b.include(s.point[0], s.point.size() > 1 ? s.point[1] : 0.0);
  b.pad(0.05);

  // Equal scale on both axes so contour ellipses keep their shape.
  const double plot_w = kWidth - 2.0 * kMargin;
  const double plot_h = kHeight - 2.0 * kMargin;
  const double scale = std::min(plot_w / (b.xmax - b.xmin), plot_h / (b.ymax - b.ymin));
  const double cx = kMargin + plot_w / 2.0;
  const double cy = kMargin + plot_h / 2.0;
  const double mx = 0.5 * (b.xmin + b.xmax);
  const double my = 0.5 * (b.ymin + b.ymax);
  auto px = [&](double x) { return cx + (x - mx) * scale; };
  auto py = [&](double y) { return cy - (y - my) * scale; };

  std::string out = header(title);
  out += axis_frame(kMargin, kMargin, kWidth - kMargin, kHeight - kMargin);
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"11\">x: [{:.2f}, {:.2f}]   y: [{:.2f}, {:.2f}]</text>\n",
      kWidth / 2.0, kHeight - kMargin / 2.5, mx - plot_w / 2.0 / scale, mx + plot_w / 2.0 / scale,
      my - plot_h / 2.0 / scale, my + plot_h / 2.0 / scale);

  for (std::size_t ci = 0; ci < concepts.size(); ++ci) {
    const auto& c = concepts[ci];
    const char* color = kPalette[ci % kPalette.size()];
    for (std::size_t k = 0; k < c.components(); ++k) {
      Eigen::Matrix2d cov = Eigen::Matrix2d::Identity() * c.covariances[k](0, 0);
      if (c.dim() > 1) cov = c.covariances[k].topLeftCorner(2, 2);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
      const Eigen::Vector2d major = eig.eigenvectors().col(1);
      const double angle = -std::atan2(major.y(), major.x()) * 180.0 / std::numbers::pi;
      const double mean_y = c.dim() > 1 ? c.means[k][1] : 0.0;
      for (double level : {1.0, 2.0}) {
        out += fmt::format(
            "<ellipse cx=\"{:.2f}\" cy=\"{:.2f}\" rx=\"{:.2f}\" ry=\"{:.2f}\" "
            "transform=\"rotate({:.2f} {:.2f} {:.2f})\" fill=\"{}\" fill-opacity=\"{}\" "
            "stroke=\"{}\" stroke-width=\"1.2\"/>\n",
            px(c.means[k][0]), py(mean_y), level * std::sqrt(eig.eigenvalues()[1]) * scale,
            level * std::sqrt(std::max(eig.eigenvalues()[0], 0.0)) * scale, angle,
            px(c.means[k][0]), py(mean_y), color, level == 1.0 ? "0.18" : "0.06", color);
      }
    }
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" "
        "fill=\"{}\">{}</text>\n",
        kMargin + 8.0, kMargin + 16.0 + 15.0 * static_cast<double>(ci), color, escape(c.label));
  }

  for (const auto& s : samples) {
    const double y = s.point.size() > 1 ? s.point[1] : 0.0;
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.2\" fill=\"#111\"/>\n",
                       px(s.point[0]), py(y));
  }
  out += "</svg>\n";
  return out;
}

std::string curve(std::span<const double> x, std::span<const double> y,
                  std::span<const double> yerr, const std::string& title,
                  const std::string& xlabel, const std::string& ylabel) {
  if (x.size() != y.size() || (!yerr.empty() && yerr.size() != y.size())) {
    throw DomainError("svg::curve: series lengths differ");
  }
  Bounds b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = yerr.empty() ? 0.0 : yerr[i];
    b.include(x[i], y[i] - e);
    b.include(x[i], y[i] + e);
  }
  b.pad(0.08);
  const double x0 = kMargin, x1 = kWidth - kMargin, y0 = kMargin, y1 = kHeight - kMargin;
  auto px = [&](double v) { return x0 + (v - b.xmin) / (b.xmax - b.xmin) * (x1 - x0); };
  auto py = [&](double v) { return y1 - (v - b.ymin) / (b.ymax - b.ymin) * (y1 - y0); };

  std::string out = header(title);
  out += axis_frame(x0, y0, x1, y1);
  for (int t = 0; t <= 4; ++t) {
    const double fx = b.xmin + (b.xmax - b.xmin) * t / 4.0;
    const double fy = b.ymin + (b.ymax - b.ymin) * t / 4.0;
    out += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"10\">{:.3g}</text>\n",
        px(fx), y1 + 14.0, fx);
    out += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-family=\"sans-serif\" "
        "font-size=\"10\">{:.3g}</text>\n",
        x0 - 4.0, py(fy) + 3.0, fy);
  }
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"12\">{}</text>\n",
      (x0 + x1) / 2.0, kHeight - 14.0, escape(xlabel));
  out += fmt::format(
      "<text x=\"14\" y=\"{:.1f}\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"12\" transform=\"rotate(-90 14 {:.1f})\">{}</text>\n",
      (y0 + y1) / 2.0, (y0 + y1) / 2.0, escape(ylabel));

  if (!x.empty()) {
    std::string points;
    for (std::size_t i = 0; i < x.size(); ++i) {
      points += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(x[i]), py(y[i]));
    }
    out += fmt::format(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.8\"/>\n", points);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!yerr.empty()) {
      out += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#1f77b4\" "
          "stroke-width=\"1\"/>\n",
          px(x[i]), py(y[i] - yerr[i]), py(y[i] + yerr[i]));
    }
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#1f77b4\"/>\n",
                       px(x[i]), py(y[i]));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace bsmix::svg
