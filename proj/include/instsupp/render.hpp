#pragma once

#include <string>
#include <vector>

#include "instsupp/corpus.hpp"
#include "instsupp/explain.hpp"

namespace instsupp::render {

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
  std::string hex() const;
  static Rgb parse(const std::string& hex);
};

struct HeatmapSpec {
  int width_px = 1200;
  int height_px = 400;
  double time_max_s = 900.0;
  std::string low_color = "#2166ac";
  std::string high_color = "#e08214";
  std::size_t k_callouts = 4;
  std::size_t ellipsize_at = 60;
  std::string title;
};

/// Linear blend between two colors, t in [0, 1], channels rounded half up.
Rgb blend(const Rgb& low, const Rgb& high, double t);

/// Maps delta_y affinely from [lo, hi] onto [0, 1]; 0.5 when lo == hi.
double interpolation_parameter(double delta_y, double lo, double hi);

/// Truncates to `max_chars` code points, appending an ellipsis when cut.
std::string ellipsize(const std::string& text, std::size_t max_chars);

/// Standalone SVG: one rect per utterance on a 0..time_max_s axis, filled
/// by its marginal score, with the k highest utterances called out above
/// the strip and the k lowest below.
std::string heatmap_svg(const Session& session, const std::vector<MarginalScore>& marginals,
                        const HeatmapSpec& spec = {});

}  // namespace instsupp::render
