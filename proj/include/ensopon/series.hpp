#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/calendar.hpp"

namespace ensopon {

/// Preprocessing stages; transitions only move forward in this order.
enum class Stage { Raw = 0, Detrended = 1, Anomaly = 2, Smoothed = 3 };

std::string_view stage_name(Stage s);

/// A monthly scalar series addressed either by position t (0-based here)
/// or by calendar month. Invalid entries carry NaN values.
struct MonthlyTimeSeries {
    YearMonth start{2000, 1};
    std::vector<double> values;
    std::vector<bool> valid;
    Stage stage = Stage::Raw;

    MonthlyTimeSeries() = default;
    MonthlyTimeSeries(YearMonth start, std::vector<double> values, Stage stage = Stage::Raw);

    size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    YearMonth month_at(size_t t) const { return start + int64_t(t); }
    YearMonth last() const { return start + int64_t(values.size()) - 1; }
    MonthRange range() const { return {start, last()}; }
    std::optional<size_t> index_of(YearMonth ym) const;

    /// Value at a calendar month, or nullopt if outside the span or invalid.
    std::optional<double> at(YearMonth ym) const;

    size_t valid_count() const;
    bool all_valid() const;

    /// Sub-series restricted to [first, last] (clamped to the span).
    MonthlyTimeSeries slice(MonthRange r) const;
};

/// Two-column CSV (date, value) with an optional `valid` column.
void write_series_csv(std::ostream& out, const MonthlyTimeSeries& s, bool with_valid = true);
MonthlyTimeSeries read_series_csv(std::string_view text);

/// Several aligned series keyed by column name, written as date + one column each.
/// All series must share start and length.
using SeriesTable = std::map<std::string, MonthlyTimeSeries>;
void write_series_table(std::ostream& out, const SeriesTable& table,
                        const std::vector<std::string>& column_order = {});
SeriesTable read_series_table(std::string_view text);

}  // namespace ensopon
