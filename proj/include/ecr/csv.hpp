#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ecr {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t cols() const { return header.size(); }
};

// RFC-4180-style field splitting (quoted fields, doubled quotes, CRLF tolerated)
std::vector<std::string> split_csv_line(const std::string& line);

// numeric table with a header row; throws ParseError with row/column context
CsvTable read_numeric_csv(const std::string& path);

// quote a field when it needs quoting
std::string csv_quote(const std::string& field);

// shortest round-trippable form at the given significant digits; inf/nan
// render as "inf"/"-inf"/"nan"
std::string format_double(double v, int significant = 12);

}  // namespace ecr
