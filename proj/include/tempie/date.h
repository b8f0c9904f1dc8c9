#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace tempie {

/// A proleptic Gregorian calendar date at day resolution.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  /// Days since 1970-01-01.
  std::int64_t serial() const;
  static Date from_serial(std::int64_t days);

  Date add_days(std::int64_t days) const { return from_serial(serial() + days); }

  /// YYYY-MM-DD.
  std::string iso() const;
  /// Parses YYYY-MM-DD; throws std::invalid_argument on malformed or invalid input.
  static Date parse_iso(std::string_view text);
};

bool is_leap_year(int year);
int days_in_month(int year, int month);
bool is_valid_date(int year, int month, int day);

}  // namespace tempie
