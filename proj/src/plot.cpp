#include "xrcn/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

namespace xrcn {

namespace {

constexpr double kChartW = 420, kChartH = 300;
constexpr double kMarginL = 60, kMarginR = 20, kMarginT = 40, kMarginB = 50;
constexpr const char* kTrainColor = "#1f77b4";
constexpr const char* kValColor = "#ff7f0e";

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Series {
  const char* name;
  const char* color;
  std::function<double(const EpochMetrics&)> value;
};

std::string chart(const std::vector<EpochMetrics>& h, double x0, const char* title, const char* ylabel, double ymax,
                  const Series& a, const Series& b) {
  const double pw = kChartW - kMarginL - kMarginR;
  const double ph = kChartH - kMarginT - kMarginB;
  const double left = x0 + kMarginL, top = kMarginT, bottom = kMarginT + ph;
  const double first = static_cast<double>(h.front().epoch);
  const double last = static_cast<double>(h.back().epoch);
  const double span = last > first ? last - first : 1.0;
  auto px = [&](double epoch) { return left + (epoch - first) / span * pw; };
  auto py = [&](double v) { return bottom - v / ymax * ph; };

  std::string s;
  s += "<g>\n";
  s += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title +
       "</text>\n";
  s += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", pw) +
       "\" height=\"" + fmt("%.1f", ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4.0;
    const double y = py(v);
    s += "<line x1=\"" + fmt("%.1f", left - 4) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" + fmt("%.1f", left) +
         "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + fmt("%.1f", y + 4) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt("%.2f", v) + "</text>\n";
  }
  const std::size_t n = h.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + 5) / 6);
  for (std::size_t i = 0; i < n; i += stride) {
    const double x = px(static_cast<double>(h[i].epoch));
    s += "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", bottom + 16) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + std::to_string(h[i].epoch) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", bottom + 36) +
       "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
  s += "<text x=\"" + fmt("%.1f", x0 + 16) + "\" y=\"" + fmt("%.1f", top + ph / 2) +
       "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " + fmt("%.1f", x0 + 16) + " " +
       fmt("%.1f", top + ph / 2) + ")\">" + ylabel + "</text>\n";

  for (const Series* ser : {&a, &b}) {
    s += "<polyline fill=\"none\" stroke=\"" + std::string(ser->color) + "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += fmt("%.2f", px(static_cast<double>(h[i].epoch))) + "," + fmt("%.2f", py(ser->value(h[i])));
    }
    s += "\"/>\n";
  }

  const double lx = left + pw - 110, ly = top + 10;
  s += "<rect x=\"" + fmt("%.1f", lx) + "\" y=\"" + fmt("%.1f", ly) +
       "\" width=\"104\" height=\"42\" fill=\"white\" stroke=\"#999\"/>\n";
  int row = 0;
  for (const Series* ser : {&a, &b}) {
    const double y = ly + 14 + 16 * row++;
    s += "<line x1=\"" + fmt("%.1f", lx + 6) + "\" y1=\"" + fmt("%.1f", y - 4) + "\" x2=\"" + fmt("%.1f", lx + 26) +
         "\" y2=\"" + fmt("%.1f", y - 4) + "\" stroke=\"" + ser->color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt("%.1f", lx + 32) + "\" y=\"" + fmt("%.1f", y) + "\" font-size=\"11\">" + ser->name +
         "</text>\n";
  }
  s += "</g>\n";
  return s;
}

}  // namespace

std::string render_curves_svg(const std::vector<EpochMetrics>& history) {
  if (history.empty()) throw InvalidArgument("render_curves_svg: no epochs to plot");

  double max_loss = 0.0;
  for (const auto& m : history) max_loss = std::max({max_loss, m.train_loss, m.val_loss});
  const double loss_top = max_loss > 0.0 ? max_loss * 1.05 : 1.0;

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", 2 * kChartW) + "\" height=\"" +
         fmt("%.0f", kChartH) + "\" viewBox=\"0 0 " + fmt("%.0f", 2 * kChartW) + " " + fmt("%.0f", kChartH) +
         "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += chart(history, 0, "Accuracy", "accuracy", 1.0,
               {"train", kTrainColor, [](const EpochMetrics& m) { return m.train_accuracy; }},
               {"validation", kValColor, [](const EpochMetrics& m) { return m.val_accuracy; }});
  svg += chart(history, kChartW, "Loss", "binary cross-entropy", loss_top,
               {"train", kTrainColor, [](const EpochMetrics& m) { return m.train_loss; }},
               {"validation", kValColor, [](const EpochMetrics& m) { return m.val_loss; }});
  svg += "</svg>\n";
  return svg;
}

}  // namespace xrcn
