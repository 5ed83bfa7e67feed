#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>

#include "clustop/error.hpp"
#include "clustop/plot.hpp"

namespace clustop {

namespace {

constexpr double kWidth = 640, kHeight = 480, kMargin = 30, kLegendWidth = 150;
constexpr double kRadius = 3.5;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Tableau-10, then golden-angle hues for larger label counts.
std::string palette(int i) {
  static constexpr std::array<const char*, 10> base = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                                       "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#17becf"};
  if (i < static_cast<int>(base.size())) return base[static_cast<std::size_t>(i)];
  const double h = std::fmod(static_cast<double>(i) * 137.508, 360.0);
  char buf[48];
  std::snprintf(buf, sizeof buf, "hsl(%.1f,65%%,50%%)", h);
  return buf;
}

std::string glyph(int shape, double x, double y, const std::string& fill) {
  const double r = kRadius;
  const std::string style = " fill=\"" + fill + "\" stroke=\"#333\" stroke-width=\"0.4\"/>";
  switch (((shape % 4) + 4) % 4) {
    case 1:
      return "<rect x=\"" + fmt(x - r) + "\" y=\"" + fmt(y - r) + "\" width=\"" + fmt(2 * r) + "\" height=\"" +
             fmt(2 * r) + "\"" + style;
    case 2:
      return "<polygon points=\"" + fmt(x) + "," + fmt(y - r) + " " + fmt(x - r) + "," + fmt(y + r) + " " +
             fmt(x + r) + "," + fmt(y + r) + "\"" + style;
    case 3:
      return "<polygon points=\"" + fmt(x) + "," + fmt(y - r) + " " + fmt(x + r) + "," + fmt(y) + " " + fmt(x) +
             "," + fmt(y + r) + " " + fmt(x - r) + "," + fmt(y) + "\"" + style;
    default:
      return "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) + "\" r=\"" + fmt(r) + "\"" + style;
  }
}

}  // namespace

std::string cluster_color(int label) { return label < 0 ? "#9e9e9e" : palette(label); }

std::string render_scatter_svg(const EmbeddingMatrix& xy, std::span<const int> labels,
                               std::optional<std::span<const int>> truth) {
  if (xy.cols() != 2) {
    throw InvalidArgument("plot needs a 2-D embedding, got " + std::to_string(xy.cols()) + " dimensions");
  }
  if (labels.size() != xy.rows() || (truth && truth->size() != xy.rows())) {
    throw InvalidArgument("plot: label count does not match embedding rows");
  }
  double lo[2] = {0, 0}, hi[2] = {1, 1};
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < xy.rows(); ++i) {
      lo[c] = i ? std::min(lo[c], xy(i, c)) : xy(i, c);
      hi[c] = i ? std::max(hi[c], xy(i, c)) : xy(i, c);
    }
    if (hi[c] - lo[c] <= 0) {
      lo[c] -= 0.5;
      hi[c] += 0.5;
    }
  }
  const double plot_w = kWidth - kLegendWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  auto px = [&](double v) { return kMargin + (v - lo[0]) / (hi[0] - lo[0]) * plot_w; };
  auto py = [&](double v) { return kHeight - kMargin - (v - lo[1]) / (hi[1] - lo[1]) * plot_h; };

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(kMargin) + "\" y=\"" + fmt(kMargin) + "\" width=\"" + fmt(plot_w) + "\" height=\"" +
         fmt(plot_h) + "\" fill=\"none\" stroke=\"#ccc\"/>\n";

  // Noise first so clusters draw on top.
  svg += "<g id=\"points\">\n";
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < xy.rows(); ++i) {
      if ((labels[i] < 0) != (pass == 0)) continue;
      const int shape = truth ? (*truth)[i] : 0;
      svg += glyph(shape, px(xy(i, 0)), py(xy(i, 1)), cluster_color(labels[i])) + "\n";
    }
  }
  svg += "</g>\n";

  std::set<int> clusters(labels.begin(), labels.end());
  svg += "<g id=\"legend\">\n";
  double y = kMargin + 10;
  const double x = kWidth - kLegendWidth + 10;
  auto entry = [&](const std::string& shape_svg, const std::string& text) {
    svg += shape_svg + "\n<text x=\"" + fmt(x + 12) + "\" y=\"" + fmt(y + 4) + "\">" + text + "</text>\n";
    y += 16;
  };
  for (int c : clusters) {
    if (c >= 0) entry(glyph(0, x, y, cluster_color(c)), "cluster " + std::to_string(c));
  }
  if (clusters.count(-1)) entry(glyph(0, x, y, cluster_color(-1)), "noise");
  if (truth) {
    y += 8;
    for (int t : std::set<int>(truth->begin(), truth->end())) entry(glyph(t, x, y, "white"), "label " + std::to_string(t));
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace clustop
