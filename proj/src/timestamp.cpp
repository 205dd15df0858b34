#include "adore/timestamp.hpp"

#include <chrono>
#include <cstdio>

namespace adore {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yy + (m <= 2));
}

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30,
                                  31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

// Reads exactly `n` digits at `pos`.
bool digits(std::string_view s, size_t pos, size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

bool valid(int y, int mo, int d, int h, int mi, int s) {
  return y >= 1 && mo >= 1 && mo <= 12 && d >= 1 &&
         d <= days_in_month(y, mo) && h >= 0 && h <= 23 && mi >= 0 &&
         mi <= 59 && s >= 0 && s <= 59;
}

struct Fields {
  int y, mo, d, h, mi, s;
};

Fields split(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  Fields f{};
  civil_from_days(days, f.y, f.mo, f.d);
  f.h = static_cast<int>(rem / 3600);
  f.mi = static_cast<int>(rem % 3600 / 60);
  f.s = static_cast<int>(rem % 60);
  return f;
}

}  // namespace

UtcTimestamp UtcTimestamp::from_civil(int year, int month, int day, int hour,
                                      int minute, int second) {
  return UtcTimestamp(days_from_civil(year, month, day) * 86400 +
                      hour * 3600 + minute * 60 + second);
}

std::string UtcTimestamp::iso8601() const {
  Fields f = split(seconds_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", f.y, f.mo,
                f.d, f.h, f.mi, f.s);
  return buf;
}

std::string UtcTimestamp::compact() const {
  Fields f = split(seconds_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02d%02d%02d%02d%02d", f.y, f.mo, f.d,
                f.h, f.mi, f.s);
  return buf;
}

std::optional<UtcTimestamp> UtcTimestamp::parse_iso8601(std::string_view t) {
  int y, mo, d, h, mi, s;
  if (t.size() != 20 || t[4] != '-' || t[7] != '-' || t[10] != 'T' ||
      t[13] != ':' || t[16] != ':' || t[19] != 'Z')
    return std::nullopt;
  if (!digits(t, 0, 4, y) || !digits(t, 5, 2, mo) || !digits(t, 8, 2, d) ||
      !digits(t, 11, 2, h) || !digits(t, 14, 2, mi) || !digits(t, 17, 2, s))
    return std::nullopt;
  if (!valid(y, mo, d, h, mi, s)) return std::nullopt;
  return from_civil(y, mo, d, h, mi, s);
}

std::optional<UtcTimestamp> UtcTimestamp::parse_oai_date(std::string_view t,
                                                         bool* day_only) {
  if (t.size() == 10) {
    int y, mo, d;
    if (t[4] != '-' || t[7] != '-' || !digits(t, 0, 4, y) ||
        !digits(t, 5, 2, mo) || !digits(t, 8, 2, d) ||
        !valid(y, mo, d, 0, 0, 0))
      return std::nullopt;
    if (day_only) *day_only = true;
    return from_civil(y, mo, d);
  }
  if (day_only) *day_only = false;
  return parse_iso8601(t);
}

std::optional<UtcTimestamp> UtcTimestamp::parse_compact(std::string_view t) {
  int y, mo, d, h, mi, s;
  if (t.size() != 14 || !digits(t, 0, 4, y) || !digits(t, 4, 2, mo) ||
      !digits(t, 6, 2, d) || !digits(t, 8, 2, h) || !digits(t, 10, 2, mi) ||
      !digits(t, 12, 2, s) || !valid(y, mo, d, h, mi, s))
    return std::nullopt;
  return from_civil(y, mo, d, h, mi, s);
}

Clock system_clock() {
  return [] {
    auto now = std::chrono::system_clock::now();
    return UtcTimestamp(std::chrono::duration_cast<std::chrono::seconds>(
                            now.time_since_epoch())
                            .count());
  };
}

}  // namespace adore
