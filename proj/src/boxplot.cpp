#include "ecr/boxplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ecr/csv.hpp"
#include "ecr/quantile.hpp"

namespace ecr {

namespace {

struct Group {
  std::string label;
  std::vector<double> values;  // finite values, already clipped
  int inf_count = 0;
};

struct BoxStats {
  double q1, median, q3, whisker_lo, whisker_hi, mean;
  std::vector<double> outliers;
};

std::string file_stem(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return name;
}

// quartiles use the order-statistic rule (smallest value whose empirical CDF
// reaches the level), whiskers are the most extreme data within 1.5 IQR
BoxStats box_stats(const std::vector<double>& v) {
  BoxStats s{};
  s.q1 = empirical_quantile(v, 0.25).finite_value();
  s.median = empirical_quantile(v, 0.5).finite_value();
  s.q3 = empirical_quantile(v, 0.75).finite_value();
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = s.q3;
  s.whisker_hi = s.q1;
  double total = 0.0;
  for (double x : v) {
    total += x;
    if (x >= lo_fence && x <= hi_fence) {
      s.whisker_lo = std::min(s.whisker_lo, x);
      s.whisker_hi = std::max(s.whisker_hi, x);
    } else {
      s.outliers.push_back(x);
    }
  }
  std::sort(s.outliers.begin(), s.outliers.end());
  s.mean = total / static_cast<double>(v.size());
  return s;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_boxplot_svg(const std::vector<std::string>& csv_paths, const BoxplotOptions& opt) {
  if (csv_paths.empty()) throw std::invalid_argument("render_boxplot_svg: no input reports");
  if (opt.metric != "mean_length" && opt.metric != "coverage") {
    throw std::invalid_argument("render_boxplot_svg: metric must be mean_length or coverage");
  }

  // gather one group per (file, method), methods in first-appearance order
  std::vector<Group> groups;
  for (const std::string& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv file is empty: " + path);
    const std::vector<std::string> header = split_csv_line(line);
    long method_col = -1;
    long metric_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "method") method_col = static_cast<long>(c);
      if (header[c] == opt.metric) metric_col = static_cast<long>(c);
    }
    if (method_col < 0 || metric_col < 0) {
      throw ParseError(path + ": report must have 'method' and '" + opt.metric + "' columns");
    }
    const std::string prefix = csv_paths.size() > 1 ? file_stem(path) + ":" : "";
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
      ++row_no;
      if (line.empty()) continue;
      const std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() != header.size()) {
        throw ParseError(path + ": malformed row " + std::to_string(row_no));
      }
      const std::string label = prefix + fields[static_cast<std::size_t>(method_col)];
      char* end = nullptr;
      const std::string& cell = fields[static_cast<std::size_t>(metric_col)];
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw ParseError(path + ": non-numeric metric at row " + std::to_string(row_no));
      }
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const Group& g) { return g.label == label; });
      if (it == groups.end()) {
        groups.push_back({label, {}, 0});
        it = groups.end() - 1;
      }
      if (std::isnan(v)) continue;  // failed repeats carry no metric
      if (std::isinf(v)) {
        ++it->inf_count;
      } else {
        it->values.push_back(v);
      }
    }
  }
  if (groups.empty()) throw std::invalid_argument("render_boxplot_svg: reports contain no rows");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any_inf = false;
  for (const Group& g : groups) {
    for (double v : g.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    any_inf |= g.inf_count > 0;
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi <= lo) hi = lo + 1.0;
  // infinite values sit on this ceiling
  const double ceiling = any_inf ? hi + 0.05 * (hi - lo) : hi;
  for (Group& g : groups) {
    for (int i = 0; i < g.inf_count; ++i) g.values.push_back(ceiling);
  }
  const double y_max = ceiling + 0.05 * (ceiling - lo);
  const double y_min = lo - 0.05 * (ceiling - lo);

  const double margin_l = 64, margin_r = 16, margin_t = 20, margin_b = 48;
  const double plot_w = opt.width - margin_l - margin_r;
  const double plot_h = opt.height - margin_t - margin_b;
  auto ypix = [&](double v) { return margin_t + plot_h * (y_max - v) / (y_max - y_min); };

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                opt.width, opt.height, opt.width, opt.height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // y axis with 5 ticks
  svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + num(margin_l) + "\" y1=\"" + num(margin_t) + "\" x2=\"" + num(margin_l) +
         "\" y2=\"" + num(margin_t + plot_h) + "\"/>\n";
  svg += "</g>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = y_min + (y_max - y_min) * t / 4.0;
    const double y = ypix(v);
    svg += "<line x1=\"" + num(margin_l - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(margin_l) +
           "\" y2=\"" + num(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(margin_l - 8) + "\" y=\"" + num(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + label_num(v) +
           "</text>\n";
  }

  const double slot = plot_w / static_cast<double>(groups.size());
  const double box_w = std::min(48.0, slot * 0.5);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Group& g = groups[i];
    const double cx = margin_l + slot * (static_cast<double>(i) + 0.5);
    svg += "<text x=\"" + num(cx) + "\" y=\"" + num(margin_t + plot_h + 18) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + g.label +
           "</text>\n";
    if (g.values.empty()) continue;
    const BoxStats s = box_stats(g.values);
    const double x0 = cx - box_w / 2, x1 = cx + box_w / 2;
    svg += "<g stroke=\"black\" fill=\"none\">\n";
    // whiskers
    svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(ypix(s.whisker_lo)) + "\" x2=\"" + num(cx) +
           "\" y2=\"" + num(ypix(s.q1)) + "\"/>\n";
    svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(ypix(s.q3)) + "\" x2=\"" + num(cx) +
           "\" y2=\"" + num(ypix(s.whisker_hi)) + "\"/>\n";
    svg += "<line x1=\"" + num(cx - box_w / 4) + "\" y1=\"" + num(ypix(s.whisker_lo)) + "\" x2=\"" +
           num(cx + box_w / 4) + "\" y2=\"" + num(ypix(s.whisker_lo)) + "\"/>\n";
    svg += "<line x1=\"" + num(cx - box_w / 4) + "\" y1=\"" + num(ypix(s.whisker_hi)) + "\" x2=\"" +
           num(cx + box_w / 4) + "\" y2=\"" + num(ypix(s.whisker_hi)) + "\"/>\n";
    // box and median
    svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(ypix(s.q3)) + "\" width=\"" + num(x1 - x0) +
           "\" height=\"" + num(ypix(s.q1) - ypix(s.q3)) + "\" fill=\"#dce6f2\"/>\n";
    svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(ypix(s.median)) + "\" x2=\"" + num(x1) +
           "\" y2=\"" + num(ypix(s.median)) + "\"/>\n";
    svg += "</g>\n";
    for (double o : s.outliers) {
      svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(ypix(o)) +
             "\" r=\"2\" fill=\"black\"/>\n";
    }
    // mean marker
    svg += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(ypix(s.mean)) +
           "\" r=\"3.5\" fill=\"white\" stroke=\"black\"/>\n";
    if (g.inf_count > 0) {
      svg += "<text x=\"" + num(cx) + "\" y=\"" + num(margin_t - 6) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
             std::to_string(g.inf_count) + " inf</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace ecr
