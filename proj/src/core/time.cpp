#include "bess/core/time.hpp"

#include <cctype>
#include <cstdio>

#include "bess/core/error.hpp"

namespace bess {
namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw DomainError("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = text[i];
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw DomainError("malformed timestamp '" + std::string(text) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c)
    throw DomainError("malformed timestamp '" + std::string(text) + "'");
}

Date checked_date(int y, int m, int d, std::string_view text) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DomainError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

}  // namespace

Date parse_date(std::string_view text) {
  const int y = parse_fixed(text, 0, 4);
  expect_char(text, 4, '-');
  const int m = parse_fixed(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = parse_fixed(text, 8, 2);
  if (text.size() != 10) throw DomainError("malformed date '" + std::string(text) + "'");
  return checked_date(y, m, d, text);
}

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.size() == 10) return start_of(parse_date(text));
  const Date day = parse_date(text.substr(0, 10));
  if (text.size() < 16 || (text[10] != 'T' && text[10] != ' '))
    throw DomainError("malformed timestamp '" + std::string(text) + "'");
  const int hh = parse_fixed(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = parse_fixed(text, 14, 2);
  std::size_t pos = 16;
  int ss = 0;
  if (pos < text.size() && text[pos] == ':') {
    ss = parse_fixed(text, pos + 1, 2);
    pos += 3;
  }
  const std::string_view zone = text.substr(pos);
  if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+0000"))
    throw DomainError("timestamp must be UTC: '" + std::string(text) + "'");
  if (hh > 23 || mm > 59 || ss > 59) throw DomainError("invalid time of day '" + std::string(text) + "'");
  return start_of(day) + std::chrono::hours{hh} + Minutes{mm} + Seconds{ss};
}

std::string format_date(Date d) {
  using namespace std::chrono;
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp ts) {
  const Date d = date_of(ts);
  const long long secs = (ts - start_of(d)).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(d).c_str(), secs / 3600,
                (secs / 60) % 60, secs % 60);
  return buf;
}

int weekday_index(Date d) { return static_cast<int>(std::chrono::weekday{d}.c_encoding()); }

int day_of_year(Date d) {
  using namespace std::chrono;
  const year_month_day ymd{d};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((d - jan1).count()) + 1;
}

}  // namespace bess
