#include "instsupp/render.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp::render {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r')
          out += ' ';
        else
          out += c;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string Rgb::hex() const { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

Rgb Rgb::parse(const std::string& hex) {
  if (hex.size() != 7 || hex[0] != '#')
    throw ValidationError(fmt::format("color '{}' is not #rrggbb", hex));
  auto channel = [&](std::size_t pos) { return std::stoi(hex.substr(pos, 2), nullptr, 16); };
  return {channel(1), channel(3), channel(5)};
}

Rgb blend(const Rgb& low, const Rgb& high, double t) {
  auto mix = [t](int a, int b) {
    return static_cast<int>(std::floor(a + t * (b - a) + 0.5));
  };
  return {mix(low.r, high.r), mix(low.g, high.g), mix(low.b, high.b)};
}

double interpolation_parameter(double delta_y, double lo, double hi) {
  if (!(hi > lo)) return 0.5;
  return std::clamp((delta_y - lo) / (hi - lo), 0.0, 1.0);
}

std::string ellipsize(const std::string& text, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (chars == max_chars) return text.substr(0, i) + "\xe2\x80\xa6";
    ++chars;
  }
  return text;
}

std::string heatmap_svg(const Session& session, const std::vector<MarginalScore>& marginals,
                        const HeatmapSpec& spec) {
  if (marginals.empty()) throw ValidationError("heatmap_svg: no marginal scores");
  if (marginals.size() != session.utterances.size())
    throw DimensionMismatch(fmt::format("heatmap_svg: {} marginals for {} utterances",
                                        marginals.size(), session.utterances.size()));

  const Rgb low = Rgb::parse(spec.low_color);
  const Rgb high = Rgb::parse(spec.high_color);
  const double lo = std::min_element(marginals.begin(), marginals.end(),
                                     [](auto& a, auto& b) { return a.delta_y < b.delta_y; })
                        ->delta_y;
  const double hi = std::max_element(marginals.begin(), marginals.end(),
                                     [](auto& a, auto& b) { return a.delta_y < b.delta_y; })
                        ->delta_y;
  const bool degenerate = !(hi > lo);

  const double margin = 40.0;
  const double plot_w = spec.width_px - 2 * margin;
  const double strip_h = spec.height_px * 0.14;
  const double strip_y = spec.height_px * 0.5 - strip_h / 2;
  auto x_of = [&](double t) {
    return margin + std::clamp(t, 0.0, spec.time_max_s) / spec.time_max_s * plot_w;
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      spec.width_px, spec.height_px, spec.width_px, spec.height_px);
  if (degenerate)
    out += "<!-- degenerate: all marginal scores are equal; every span uses the mid color -->\n";
  out += "<defs>\n";
  out += fmt::format(
      "<marker id=\"arrow-high\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" "
      "markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"{}\"/></marker>\n",
      high.hex());
  out += fmt::format(
      "<marker id=\"arrow-low\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" "
      "markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"{}\"/></marker>\n",
      low.hex());
  out += "</defs>\n";
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
                     spec.width_px, spec.height_px);
  const std::string title =
      spec.title.empty() ? fmt::format("Session {}", session.session_id) : spec.title;
  out += fmt::format(
      "<text class=\"title\" x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
      num(margin), xml_escape(title));

  out += "<g class=\"spans\">\n";
  for (const auto& m : marginals) {
    const auto& u = session.utterances.at(m.utterance_index);
    const double t = interpolation_parameter(m.delta_y, lo, hi);
    const double x0 = x_of(std::min(u.start_s, u.end_s));
    const double w = std::max(x_of(std::max(u.start_s, u.end_s)) - x0, 0.5);
    out += fmt::format(
        "<rect class=\"utterance\" data-index=\"{}\" data-t=\"{}\" x=\"{}\" y=\"{}\" "
        "width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
        m.utterance_index, fmt::format("{:.6f}", t), num(x0), num(strip_y), num(w),
        num(strip_h), blend(low, high, t).hex());
  }
  out += "</g>\n";

  // Time axis.
  const double axis_y = strip_y + strip_h + 14;
  out += "<g class=\"axis\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">\n";
  for (double t = 0; t <= spec.time_max_s + 1e-9; t += 60.0) {
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#888888\"/>\n",
                       num(x_of(t)), num(strip_y + strip_h), num(strip_y + strip_h + 4));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       num(x_of(t)), num(axis_y), static_cast<int>(t));
  }
  out += "</g>\n";

  auto tb = top_bottom(marginals, spec.k_callouts);
  if (!tb.note.empty()) out += "<!-- " + xml_escape(tb.note) + " -->\n";

  auto callouts = [&](const std::vector<MarginalScore>& list, bool above) {
    const double band_top = above ? 30.0 : strip_y + strip_h + 30.0;
    const double band_bottom = above ? strip_y - 12.0 : spec.height_px - 10.0;
    const double step = list.empty() ? 0.0 : (band_bottom - band_top) / static_cast<double>(list.size());
    const std::string color = above ? high.hex() : low.hex();
    const std::string marker = above ? "arrow-high" : "arrow-low";
    for (std::size_t rank = 0; rank < list.size(); ++rank) {
      const auto& m = list[rank];
      const auto& u = session.utterances.at(m.utterance_index);
      const double anchor_x = x_of(0.5 * (u.start_s + u.end_s));
      // Nearest rank sits closest to the strip.
      const double y = above ? band_bottom - step * static_cast<double>(rank) - 4
                             : band_top + step * static_cast<double>(rank) + 8;
      const double text_x = std::clamp(anchor_x, margin + 170.0, spec.width_px - margin - 170.0);
      const double line_end = above ? strip_y - 1 : strip_y + strip_h + 1;
      const double line_start = above ? y + 3 : y - 11;
      out += fmt::format(
          "<line class=\"connector\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" "
          "stroke-width=\"1.2\" marker-end=\"url(#{})\"/>\n",
          num(text_x), num(line_start), num(anchor_x), num(line_end), color, marker);
      out += fmt::format(
          "<text class=\"callout\" data-index=\"{}\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{}</text>\n",
          m.utterance_index, num(text_x), num(y), color,
          xml_escape(ellipsize(u.text, spec.ellipsize_at)));
    }
  };
  callouts(tb.top, true);
  callouts(tb.bottom, false);

  out += "</svg>\n";
  return out;
}

}  // namespace instsupp::render
