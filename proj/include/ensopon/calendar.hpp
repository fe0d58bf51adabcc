#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ensopon {

/// A calendar month (year, month 1..12). Ordered and steppable.
struct YearMonth {
    int year = 2000;
    int month = 1;

    /// Months since 0000-01; difference of two indices is a month count.
    constexpr int64_t index() const { return int64_t(year) * 12 + (month - 1); }
    static constexpr YearMonth from_index(int64_t idx) {
        int64_t y = idx >= 0 ? idx / 12 : -((-idx + 11) / 12);
        return {int(y), int(idx - y * 12) + 1};
    }
    constexpr YearMonth operator+(int64_t months) const { return from_index(index() + months); }
    constexpr YearMonth operator-(int64_t months) const { return from_index(index() - months); }
    constexpr int64_t operator-(const YearMonth& other) const { return index() - other.index(); }

    constexpr auto operator<=>(const YearMonth&) const = default;

    std::string to_string() const;  // "YYYY-MM"
    static YearMonth parse(std::string_view text);  // "YYYY-MM" or "YYYY-MM-DD"
};

/// Inclusive month range.
struct MonthRange {
    YearMonth first{2000, 3};
    YearMonth last{2023, 3};

    int64_t size() const { return last - first + 1; }
    bool contains(YearMonth ym) const { return first <= ym && ym <= last; }
};

/// Default outage study window, 2000-03 through 2023-03.
inline constexpr MonthRange kDefaultStudyWindow{{2000, 3}, {2023, 3}};

using Date = std::chrono::year_month_day;

int64_t to_epoch_day(const Date& d);
Date from_epoch_day(int64_t day);
YearMonth year_month_of(const Date& d);
int days_in_month(int year, int month);
bool is_leap_year(int year);

/// Position of a date on the 365-day ring used for day-of-year windows:
/// 0 = Jan 1 ... 364 = Dec 31. Feb 29 shares Feb 28's position (58).
int ring_position(const Date& d);

/// Leap-calendar day-of-year, 1..366 (Mar 1 is always 61).
int leap_day_of_year(const Date& d);

/// Accepts YYYY-MM-DD, YYYY/MM/DD, M/D/YYYY, optionally followed by a time.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(const Date& d);

}  // namespace ensopon
