#include "ensopon/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "ensopon/error.hpp"

namespace ensopon {

namespace {

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io: return "E_IO";
        case ErrorCode::Path: return "E_PATH";
        case ErrorCode::Header: return "E_HEADER";
        case ErrorCode::Schema: return "E_SCHEMA";
        case ErrorCode::Size: return "E_SIZE";
        case ErrorCode::Empty: return "E_EMPTY";
        case ErrorCode::Coverage: return "E_COVERAGE";
        case ErrorCode::Gap: return "E_GAP";
        case ErrorCode::Region: return "E_REGION";
        case ErrorCode::Stage: return "E_STAGE";
        case ErrorCode::Domain: return "E_DOMAIN";
        case ErrorCode::Degenerate: return "E_DEGENERATE";
        case ErrorCode::Config: return "E_CONFIG";
        case ErrorCode::Dependency: return "E_DEPENDENCY";
        case ErrorCode::Artifact: return "E_ARTIFACT";
    }
    return "E_UNKNOWN";
}

std::string YearMonth::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

YearMonth YearMonth::parse(std::string_view text) {
    text = trim(text);
    int y = 0, m = 0;
    auto dash = text.find_first_of("-/");
    if (dash == std::string_view::npos || !parse_int(text.substr(0, dash), y))
        throw Error(ErrorCode::Schema, "bad year-month: '" + std::string(text) + "'");
    auto rest = text.substr(dash + 1);
    auto dash2 = rest.find_first_of("-/");
    if (!parse_int(rest.substr(0, dash2), m) || m < 1 || m > 12)
        throw Error(ErrorCode::Schema, "bad year-month: '" + std::string(text) + "'");
    return {y, m};
}

int64_t to_epoch_day(const Date& d) {
    return std::chrono::sys_days{d}.time_since_epoch().count();
}

Date from_epoch_day(int64_t day) {
    return Date{std::chrono::sys_days{std::chrono::days{day}}};
}

YearMonth year_month_of(const Date& d) {
    return {int(d.year()), int(unsigned(d.month()))};
}

bool is_leap_year(int year) { return std::chrono::year{year}.is_leap(); }

int days_in_month(int year, int month) {
    using namespace std::chrono;
    return int(unsigned(year_month_day_last{std::chrono::year{year} / std::chrono::month(unsigned(month)) / last}.day()));
}

int ring_position(const Date& d) {
    int m = int(unsigned(d.month()));
    int day = int(unsigned(d.day()));
    static constexpr int kCumulative[12] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
    if (m == 2 && day == 29) day = 28;
    return kCumulative[m - 1] + day - 1;
}

int leap_day_of_year(const Date& d) {
    int m = int(unsigned(d.month()));
    int day = int(unsigned(d.day()));
    static constexpr int kCumulative[12] = {0, 31, 60, 91, 121, 152, 182, 213, 244, 274, 305, 335};
    return kCumulative[m - 1] + day;
}

std::optional<Date> parse_date(std::string_view text) {
    text = trim(text);
    // drop a trailing time component
    if (auto sp = text.find_first_of(" T"); sp != std::string_view::npos) text = text.substr(0, sp);
    if (text.empty()) return std::nullopt;

    int a = 0, b = 0, c = 0;
    auto p1 = text.find_first_of("-/");
    if (p1 == std::string_view::npos) return std::nullopt;
    auto p2 = text.find_first_of("-/", p1 + 1);
    if (p2 == std::string_view::npos) return std::nullopt;
    if (!parse_int(text.substr(0, p1), a) || !parse_int(text.substr(p1 + 1, p2 - p1 - 1), b) ||
        !parse_int(text.substr(p2 + 1), c))
        return std::nullopt;

    int y, m, d;
    if (p1 == 4) {  // ISO-like
        y = a; m = b; d = c;
    } else {  // US M/D/YYYY
        m = a; d = b; y = c;
        if (y < 100) y += (y < 70 ? 2000 : 1900);
    }
    Date date{std::chrono::year{y}, std::chrono::month(unsigned(m)), std::chrono::day(unsigned(d))};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()), unsigned(d.day()));
    return buf;
}

}  // namespace ensopon
