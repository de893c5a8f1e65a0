#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bess::csv {

/// Minimal reader for the comma-separated files used here: no quoting, `#` comment lines and
/// blank lines skipped, first non-comment line is the header.
class Reader {
 public:
  explicit Reader(std::istream& in);

  /// Throws IngestionError unless the header matches `expected` column-for-column.
  void require_header(const std::vector<std::string>& expected) const;
  const std::vector<std::string>& header() const noexcept { return header_; }

  /// Reads the next data row; returns false at end of input. Row numbers count data rows from 1.
  bool next(std::vector<std::string>& fields);
  std::size_t row() const noexcept { return row_; }

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t row_ = 0;
};

std::vector<std::string> split(std::string_view line, char sep = ',');

double parse_double(std::string_view text, std::size_t row);
long long parse_int(std::string_view text, std::size_t row);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace bess::csv
