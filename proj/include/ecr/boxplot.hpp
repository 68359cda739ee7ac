#pragma once

#include <string>
#include <vector>

namespace ecr {

struct BoxplotOptions {
  std::string metric = "mean_length";  // or "coverage"
  int width = 720;
  int height = 420;
};

// Tukey box-and-whisker SVG, one box per (report file, method). Infinite
// metric values are clipped to the plot ceiling and annotated with a count.
// Output bytes are deterministic for fixed inputs.
std::string render_boxplot_svg(const std::vector<std::string>& csv_paths, const BoxplotOptions& opt);

}  // namespace ecr
