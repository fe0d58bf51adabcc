#include "ensopon/series.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ensopon/csv.hpp"
#include "ensopon/error.hpp"

namespace ensopon {

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::Raw: return "raw";
        case Stage::Detrended: return "detrended";
        case Stage::Anomaly: return "anomaly";
        case Stage::Smoothed: return "smoothed";
    }
    return "?";
}

MonthlyTimeSeries::MonthlyTimeSeries(YearMonth s, std::vector<double> v, Stage st)
    : start(s), values(std::move(v)), stage(st) {
    valid.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) valid[i] = !std::isnan(values[i]);
}

std::optional<size_t> MonthlyTimeSeries::index_of(YearMonth ym) const {
    int64_t t = ym - start;
    if (t < 0 || t >= int64_t(values.size())) return std::nullopt;
    return size_t(t);
}

std::optional<double> MonthlyTimeSeries::at(YearMonth ym) const {
    auto t = index_of(ym);
    if (!t || !valid[*t]) return std::nullopt;
    return values[*t];
}

size_t MonthlyTimeSeries::valid_count() const {
    return size_t(std::count(valid.begin(), valid.end(), true));
}

bool MonthlyTimeSeries::all_valid() const {
    return std::all_of(valid.begin(), valid.end(), [](bool b) { return b; });
}

MonthlyTimeSeries MonthlyTimeSeries::slice(MonthRange r) const {
    MonthlyTimeSeries out;
    out.stage = stage;
    if (values.empty()) return out;
    YearMonth first = std::max(r.first, start);
    YearMonth lastm = std::min(r.last, last());
    out.start = first;
    if (lastm < first) return out;
    size_t a = size_t(first - start), b = size_t(lastm - start) + 1;
    out.values.assign(values.begin() + a, values.begin() + b);
    out.valid.assign(valid.begin() + a, valid.begin() + b);
    return out;
}

void write_series_csv(std::ostream& out, const MonthlyTimeSeries& s, bool with_valid) {
    out << (with_valid ? "date,value,valid\n" : "date,value\n");
    for (size_t t = 0; t < s.size(); ++t) {
        out << s.month_at(t).to_string() << ',' << csv::format_double(s.values[t]);
        if (with_valid) out << ',' << (s.valid[t] ? 1 : 0);
        out << '\n';
    }
}

namespace {

// Parses a date column that must be a contiguous monthly sequence.
YearMonth check_contiguous(const csv::Table& table, size_t date_col) {
    if (table.rows.empty()) throw Error(ErrorCode::Empty, "series table has no rows");
    YearMonth first = YearMonth::parse(table.rows[0].at(date_col));
    for (size_t i = 1; i < table.rows.size(); ++i) {
        YearMonth ym = YearMonth::parse(table.rows[i].at(date_col));
        if (ym != first + int64_t(i))
            throw Error(ErrorCode::Gap, "non-contiguous month at row " + std::to_string(i + 2) + ": " + ym.to_string());
    }
    return first;
}

}  // namespace

MonthlyTimeSeries read_series_csv(std::string_view text) {
    auto table = csv::parse(text);
    auto date_col = table.column("date");
    auto value_col = table.column("value");
    if (!date_col || !value_col) throw Error(ErrorCode::Header, "series CSV needs date and value columns");
    auto valid_col = table.column("valid");
    YearMonth first = check_contiguous(table, *date_col);
    MonthlyTimeSeries s;
    s.start = first;
    for (const auto& row : table.rows) {
        auto v = csv::parse_double(row.at(*value_col));
        if (!v) throw Error(ErrorCode::Schema, "bad value '" + row.at(*value_col) + "'");
        bool ok = !std::isnan(*v);
        if (valid_col) ok = ok && csv::trim(row.at(*valid_col)) == "1";
        s.values.push_back(ok ? *v : std::nan(""));
        s.valid.push_back(ok);
    }
    return s;
}

void write_series_table(std::ostream& out, const SeriesTable& table, const std::vector<std::string>& column_order) {
    std::vector<std::string> cols = column_order;
    if (cols.empty())
        for (const auto& [k, _] : table) cols.push_back(k);
    if (cols.empty()) throw Error(ErrorCode::Empty, "empty series table");
    const auto& ref = table.at(cols.front());
    for (const auto& c : cols) {
        const auto& s = table.at(c);
        if (s.start != ref.start || s.size() != ref.size())
            throw Error(ErrorCode::Size, "series table columns are not aligned: " + c);
    }
    std::vector<std::string> header{"date"};
    header.insert(header.end(), cols.begin(), cols.end());
    csv::write_row(out, header);
    for (size_t t = 0; t < ref.size(); ++t) {
        std::vector<std::string> row{ref.month_at(t).to_string()};
        for (const auto& c : cols) {
            const auto& s = table.at(c);
            row.push_back(s.valid[t] ? csv::format_double(s.values[t]) : "nan");
        }
        csv::write_row(out, row);
    }
}

SeriesTable read_series_table(std::string_view text) {
    auto table = csv::parse(text);
    auto date_col = table.column("date");
    if (!date_col) throw Error(ErrorCode::Header, "series table needs a date column");
    YearMonth first = check_contiguous(table, *date_col);
    SeriesTable out;
    for (size_t c = 0; c < table.header.size(); ++c) {
        if (c == *date_col) continue;
        std::vector<double> vals;
        vals.reserve(table.rows.size());
        for (const auto& row : table.rows) {
            auto v = csv::parse_double(row.at(c));
            if (!v) throw Error(ErrorCode::Schema, "bad value '" + row.at(c) + "' in column " + table.header[c]);
            vals.push_back(*v);
        }
        out.emplace(table.header[c], MonthlyTimeSeries(first, std::move(vals)));
    }
    return out;
}

}  // namespace ensopon
