#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace adore {

// A UTC instant at seconds precision, the only granularity the repositories
// expose.
class UtcTimestamp {
 public:
  constexpr UtcTimestamp() = default;
  constexpr explicit UtcTimestamp(std::int64_t seconds) : seconds_(seconds) {}

  constexpr std::int64_t seconds() const { return seconds_; }

  // `YYYY-MM-DDThh:mm:ssZ`.
  std::string iso8601() const;
  // `YYYYMMDDhhmmss`, the ARC archive-date form.
  std::string compact() const;

  // Strict parse of `YYYY-MM-DDThh:mm:ssZ`; nullopt on any deviation,
  // including out-of-range fields.
  static std::optional<UtcTimestamp> parse_iso8601(std::string_view text);
  // Accepts either `YYYY-MM-DD` or the full seconds form. `day_only` is set
  // when the short form was used.
  static std::optional<UtcTimestamp> parse_oai_date(std::string_view text,
                                                    bool* day_only = nullptr);
  static std::optional<UtcTimestamp> parse_compact(std::string_view text);

  static UtcTimestamp from_civil(int year, int month, int day, int hour = 0,
                                 int minute = 0, int second = 0);

  constexpr UtcTimestamp operator+(std::int64_t delta) const {
    return UtcTimestamp(seconds_ + delta);
  }
  constexpr auto operator<=>(const UtcTimestamp&) const = default;

 private:
  std::int64_t seconds_ = 0;
};

using Clock = std::function<UtcTimestamp()>;

Clock system_clock();

// Test clock: returns `start`, advancing by `step` seconds on every call.
class SteppingClock {
 public:
  explicit SteppingClock(UtcTimestamp start, std::int64_t step = 0)
      : next_(start), step_(step) {}

  UtcTimestamp operator()() {
    UtcTimestamp now = next_;
    next_ = next_ + step_;
    return now;
  }
  void set(UtcTimestamp t) { next_ = t; }
  UtcTimestamp peek() const { return next_; }

 private:
  UtcTimestamp next_;
  std::int64_t step_;
};

}  // namespace adore
