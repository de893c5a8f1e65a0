#include "bess/core/csv.hpp"

#include <charconv>
#include <cmath>

#include "bess/core/error.hpp"

namespace bess::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool read_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    const auto field = trim(line.substr(start, pos == std::string_view::npos ? line.size() - start : pos - start));
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Reader::Reader(std::istream& in) : in_(in) {
  std::string line;
  if (!read_content_line(in_, line)) throw IngestionError("empty file: missing header");
  header_ = split(line);
}

void Reader::require_header(const std::vector<std::string>& expected) const {
  if (header_ != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw IngestionError("unexpected header, want '" + want + "'");
  }
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  if (!read_content_line(in_, line)) return false;
  ++row_;
  fields = split(line);
  if (fields.size() != header_.size())
    throw IngestionError("expected " + std::to_string(header_.size()) + " fields, got " +
                             std::to_string(fields.size()),
                         row_);
  return true;
}

double parse_double(std::string_view text, std::size_t row) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value))
    throw IngestionError("not a number: '" + std::string(text) + "'", row);
  return value;
}

long long parse_int(std::string_view text, std::size_t row) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw IngestionError("not an integer: '" + std::string(text) + "'", row);
  return value;
}

std::string format_double(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace bess::csv
