#include <unicode/utf8.h>

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gpath/error.hpp"
#include "gpath/report.hpp"

namespace gpath {
namespace {

constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fixed(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("0");
}

// XML-escapes and replaces malformed UTF-8 (token pieces can split a
// multi-byte character) with U+FFFD.
std::string xml_text(std::string_view s) {
  std::string out;
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto length = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < length) {
    const std::int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c < 0 || (c < 0x20 && c != '\t')) {
      out += "\xEF\xBF\xBD";
      continue;
    }
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.append(s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  const std::size_t n = spec.x_labels.size();
  for (const auto& line : spec.lines)
    if (line.values.size() != n)
      throw Error("plot '" + spec.title + "': line '" + line.label + "' has " + std::to_string(line.values.size()) +
                  " values for " + std::to_string(n) + " x labels");
  if (spec.trigger && *spec.trigger >= n) throw Error("plot '" + spec.title + "': trigger index out of range");

  const double left = 70, right = 20, top = 40, bottom = 90;
  const double w = spec.width, h = spec.height;
  const double plot_w = w - left - right, plot_h = h - top - bottom;

  double lo = INFINITY, hi = -INFINITY;
  for (const auto& line : spec.lines)
    for (const auto& v : line.values)
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 1, hi += 1;
  const double pad = (hi - lo) * 0.05;
  lo -= pad;
  hi += pad;

  const auto x_at = [&](std::size_t i) { return left + (n <= 1 ? plot_w / 2 : plot_w * static_cast<double>(i) / static_cast<double>(n - 1)); };
  const auto y_at = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
       std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + xml_text(spec.title) +
       "</text>\n";

  // axes and y ticks
  s += "<g stroke=\"#444\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
       fixed(top + plot_h) + "\"/>\n";
  s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top + plot_h) + "\" x2=\"" + fixed(left + plot_w) +
       "\" y2=\"" + fixed(top + plot_h) + "\"/>\n";
  s += "</g>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    const double y = y_at(v);
    s += "<line x1=\"" + fixed(left - 4) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + plot_w) + "\" y2=\"" +
         fixed(y) + "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(y + 4) + "\" text-anchor=\"end\">" + xml_text(format_number(std::round(v * 1000) / 1000)) + "</text>\n";
  }
  s += "<text x=\"14\" y=\"" + fixed(top + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       fixed(top + plot_h / 2) + ")\">" + xml_text(spec.y_label) + "</text>\n";

  // token labels
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_at(i), y = top + plot_h + 12;
    s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" text-anchor=\"end\" transform=\"rotate(-45 " + fixed(x) +
         " " + fixed(y) + ")\"" + (spec.trigger == i ? " font-weight=\"bold\"" : "") + ">" +
         xml_text(spec.x_labels[i]) + "</text>\n";
  }

  if (spec.trigger) {
    const double x = x_at(*spec.trigger);
    s += "<line class=\"trigger\" x1=\"" + fixed(x) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
         fixed(top + plot_h) + "\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t l = 0; l < spec.lines.size(); ++l) {
    const auto& line = spec.lines[l];
    const char* color = kPalette[l % std::size(kPalette)];
    std::string points;
    const auto flush = [&] {
      if (!points.empty())
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + points +
             "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = line.values[i];
      if (!v || !std::isfinite(*v)) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += fixed(x_at(i)) + "," + fixed(y_at(*v));
    }
    flush();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = line.values[i];
      if (v && std::isfinite(*v))
        s += "<circle cx=\"" + fixed(x_at(i)) + "\" cy=\"" + fixed(y_at(*v)) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
  }

  // legend
  for (std::size_t l = 0; l < spec.lines.size(); ++l) {
    const double y = top + 8 + 16 * static_cast<double>(l);
    const double x = left + plot_w - 150;
    s += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(x + 18) + "\" y2=\"" + fixed(y) +
         "\" stroke=\"" + kPalette[l % std::size(kPalette)] + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fixed(x + 24) + "\" y=\"" + fixed(y + 4) + "\">" + xml_text(spec.lines[l].label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void emit_plot(const PlotSpec& spec, const std::filesystem::path& path) { write_text_file(path, render_svg(spec)); }

}  // namespace gpath
