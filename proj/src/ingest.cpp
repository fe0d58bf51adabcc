#include "ensopon/ingest.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ensopon/csv.hpp"
#include "ensopon/error.hpp"

namespace ensopon {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Outage records

namespace {

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(char(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::optional<size_t> find_column(const csv::Table& t, const std::vector<std::string>& aliases) {
    for (const auto& a : aliases)
        if (auto c = t.column(a)) return c;
    return std::nullopt;
}

std::optional<int64_t> parse_count(std::string_view s) {
    auto v = csv::parse_double(s);
    if (!v) {
        // "1,200" style thousands separators
        std::string digits;
        for (char c : csv::trim(s))
            if (c != ',') digits.push_back(c);
        v = csv::parse_double(digits);
    }
    if (!v || std::isnan(*v) || *v < 0) return std::nullopt;
    return int64_t(std::llround(*v));
}

std::optional<double> parse_nonneg(std::string_view s) {
    auto v = csv::parse_double(s);
    if (!v || std::isnan(*v) || *v < 0) return std::nullopt;
    return *v;
}

// First recognizable state in free text such as "Texas: Houston; Oklahoma".
std::optional<std::string> state_from_text(std::string_view text) {
    if (auto s = normalize_state(text)) return s;
    std::string cur;
    for (size_t i = 0; i <= text.size(); ++i) {
        char c = i < text.size() ? text[i] : ';';
        if (c == ':' || c == ';' || c == ',' || c == '/' || c == '(' || c == ')') {
            if (auto s = normalize_state(cur)) return s;
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return std::nullopt;
}

}  // namespace

CauseCategory CauseFilter::classify(std::string_view cause) const {
    for (const auto& w : words(cause))
        for (const auto& p : severe_weather) {
            if (p.size() <= 3 ? w == p : w.find(p) != std::string::npos) return CauseCategory::SevereWeather;
        }
    return CauseCategory::Other;
}

OutageParseResult parse_outage_records(std::string_view text, const OutageParseOptions& opt) {
    csv::Table table = csv::parse(text);
    auto date_col = find_column(table, opt.aliases.begin_date);
    auto state_col = find_column(table, opt.aliases.state);
    auto cause_col = find_column(table, opt.aliases.cause);
    if (!date_col || !state_col || !cause_col)
        throw Error(ErrorCode::Header, "outage table has no recognizable header (need begin date, state and cause columns)");
    auto id_col = find_column(table, opt.aliases.event_id);
    auto cust_col = find_column(table, opt.aliases.customers);
    auto loss_col = find_column(table, opt.aliases.demand_loss);

    OutageParseResult res;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto cell = [&](std::optional<size_t> c) -> std::string_view {
            if (!c || *c >= row.size()) return {};
            return csv::trim(row[*c]);
        };
        auto date_text = cell(date_col), state_text = cell(state_col), cause_text = cell(cause_col);
        if (date_text.empty() || state_text.empty() || cause_text.empty()) {
            ++res.dropped.incomplete;
            continue;
        }
        auto date = parse_date(date_text);
        if (!date) {
            ++res.dropped.bad_date;
            continue;
        }
        auto state = state_from_text(state_text);
        if (!state) {
            ++res.dropped.unknown_state;
            continue;
        }
        if (!is_continental_state(*state)) {
            ++res.dropped.non_continental;
            continue;
        }
        if (!opt.window.contains(year_month_of(*date))) {
            ++res.dropped.out_of_window;
            continue;
        }
        auto category = opt.causes.classify(cause_text);
        if (opt.severe_weather_only && category != CauseCategory::SevereWeather) {
            ++res.dropped.not_weather;
            continue;
        }
        OutageRecord rec;
        rec.event_id = id_col && !cell(id_col).empty() ? std::string(cell(id_col)) : "row-" + std::to_string(r + 1);
        rec.begin_date = *date;
        rec.state = *state;
        rec.cause_category = category;
        rec.cause_text = std::string(cause_text);
        if (cust_col) rec.customers_affected = parse_count(cell(cust_col));
        if (loss_col) rec.demand_loss_mw = parse_nonneg(cell(loss_col));
        res.records.push_back(std::move(rec));
    }
    if (res.records.empty())
        throw Error(ErrorCode::Empty, "no outage records survived filtering (" + std::to_string(res.dropped.total()) +
                                          " rows dropped)");
    return res;
}

OutageParseResult read_outage_records(const std::filesystem::path& path, const OutageParseOptions& options) {
    return parse_outage_records(read_text_file(path), options);
}

void write_outage_records(std::ostream& out, const std::vector<OutageRecord>& records) {
    csv::write_row(out, {"event_id", "begin_date", "state", "cause", "customers_affected", "demand_loss_mw"});
    for (const auto& r : records) {
        csv::write_row(out, {r.event_id, format_date(r.begin_date), r.state, r.cause_text,
                             r.customers_affected ? std::to_string(*r.customers_affected) : "unknown",
                             r.demand_loss_mw ? csv::format_double(*r.demand_loss_mw) : "unknown"});
    }
}

// ---------------------------------------------------------------------------
// Monthly PON

SeriesTable RegionalPon::as_table() const {
    SeriesTable t;
    t.emplace("US", all_us);
    for (const auto& [id, s] : regions) t.emplace(std::string(region_code(id)), s);
    return t;
}

RegionalPon RegionalPon::from_table(const SeriesTable& table) {
    RegionalPon p;
    auto it = table.find("US");
    if (it == table.end()) throw Error(ErrorCode::Header, "PON table lacks the US column");
    p.all_us = it->second;
    for (const auto& [name, s] : table) {
        if (name == "US") continue;
        auto id = parse_region(name);
        if (!id) throw Error(ErrorCode::Region, "unknown region column '" + name + "'");
        p.regions.emplace(*id, s);
    }
    return p;
}

int64_t RegionalPon::total_events() const {
    double sum = 0;
    for (size_t t = 0; t < all_us.size(); ++t)
        if (all_us.valid[t]) sum += all_us.values[t];
    return int64_t(std::llround(sum));
}

RegionalPon monthly_pon(const std::vector<OutageRecord>& records, const RegionMap& map, MonthRange window) {
    const auto n = size_t(window.size());
    RegionalPon out;
    out.all_us = MonthlyTimeSeries(window.first, std::vector<double>(n, 0.0));
    for (RegionId id : kAllRegions) out.regions.emplace(id, MonthlyTimeSeries(window.first, std::vector<double>(n, 0.0)));
    for (const auto& r : records) {
        RegionId id = map.region_of_state(r.state);
        YearMonth ym = year_month_of(r.begin_date);
        if (!window.contains(ym))
            throw Error(ErrorCode::Coverage, "record " + r.event_id + " begins outside the study window");
        size_t t = size_t(ym - window.first);
        out.regions.at(id).values[t] += 1.0;
        out.all_us.values[t] += 1.0;
    }
    return out;
}

EligibleRegions exclude_sparse_regions(const RegionalPon& pon, int64_t threshold) {
    EligibleRegions e;
    for (const auto& [id, s] : pon.regions) {
        double sum = 0;
        for (size_t t = 0; t < s.size(); ++t)
            if (s.valid[t]) sum += s.values[t];
        int64_t total = int64_t(std::llround(sum));
        e.totals[id] = total;
        (total < threshold ? e.excluded : e.eligible).push_back(id);
    }
    if (e.eligible.empty()) e.warnings.push_back("no region reaches " + std::to_string(threshold) + " events");
    return e;
}

// ---------------------------------------------------------------------------
// ENSO indices

std::string_view index_name(IndexKind k) {
    switch (k) {
        case IndexKind::MEI: return "MEI";
        case IndexKind::Nino34: return "Nino34";
        case IndexKind::Nino3: return "Nino3";
        case IndexKind::Nino4: return "Nino4";
        case IndexKind::SOI: return "SOI";
    }
    return "?";
}

IndexKind parse_index_kind(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "mei" || key == "meiv2") return IndexKind::MEI;
    if (key == "nino34" || key == "nino3point4") return IndexKind::Nino34;
    if (key == "nino3") return IndexKind::Nino3;
    if (key == "nino4") return IndexKind::Nino4;
    if (key == "soi") return IndexKind::SOI;
    throw Error(ErrorCode::Config, "unknown ENSO index '" + std::string(name) + "'");
}

EnsoIndexSeries parse_enso_index(std::string_view text, IndexKind kind, const IndexParseOptions& opt) {
    csv::Table table = csv::parse(text);
    std::map<YearMonth, double> raw;
    auto record = [&](YearMonth ym, std::string_view cell) {
        auto v = csv::parse_double(cell);
        if (!v) {
            if (csv::trim(cell).empty()) return;
            throw Error(ErrorCode::Schema, "bad index value '" + std::string(cell) + "' at " + ym.to_string());
        }
        if (std::isnan(*v) || *v <= opt.missing_at_or_below) return;
        raw[ym] = *v;
    };

    auto date_col = table.column("date");
    auto year_col = table.column("year");
    auto month_col = table.column("month");
    auto value_col = table.column("value");
    if (!value_col) value_col = table.column(index_name(kind));
    if (date_col && value_col) {
        for (const auto& row : table.rows) record(YearMonth::parse(row.at(*date_col)), row.at(*value_col));
    } else if (year_col && month_col && value_col) {
        for (const auto& row : table.rows) {
            auto y = csv::parse_double(row.at(*year_col));
            auto m = csv::parse_double(row.at(*month_col));
            if (!y || !m || *m < 1 || *m > 12) throw Error(ErrorCode::Schema, "bad year/month in index table");
            record({int(*y), int(*m)}, row.at(*value_col));
        }
    } else if (year_col && table.header.size() >= 13) {
        static constexpr std::string_view kMonths[12] = {"jan", "feb", "mar", "apr", "may", "jun",
                                                         "jul", "aug", "sep", "oct", "nov", "dec"};
        size_t cols[12];
        for (int m = 0; m < 12; ++m) {
            auto c = table.column(kMonths[m]);
            if (!c) c = table.column(std::to_string(m + 1));
            if (!c) throw Error(ErrorCode::Header, "wide index table lacks a column for month " + std::to_string(m + 1));
            cols[m] = *c;
        }
        for (const auto& row : table.rows) {
            auto y = csv::parse_double(row.at(*year_col));
            if (!y) throw Error(ErrorCode::Schema, "bad year in index table");
            for (int m = 0; m < 12; ++m)
                if (cols[m] < row.size()) record({int(*y), m + 1}, row[cols[m]]);
        }
    } else {
        throw Error(ErrorCode::Header, "index table has no recognizable header");
    }

    // Window must be fully present.
    for (YearMonth ym = opt.window.first; ym <= opt.window.last; ym = ym + 1)
        if (!raw.count(ym)) {
            bool any_before = raw.lower_bound(ym) != raw.begin();
            bool any_after = raw.upper_bound(ym) != raw.end();
            throw Error(any_before && any_after ? ErrorCode::Gap : ErrorCode::Coverage,
                        std::string(index_name(kind)) + " index is missing " + ym.to_string());
        }
    // Extend backwards through the contiguous lead months.
    YearMonth first = opt.window.first;
    for (int k = 1; k <= opt.lead_months && raw.count(opt.window.first - k); ++k) first = opt.window.first - k;

    EnsoIndexSeries out;
    out.kind = kind;
    std::vector<double> vals;
    for (YearMonth ym = first; ym <= opt.window.last; ym = ym + 1) vals.push_back(raw.at(ym));
    out.values = MonthlyTimeSeries(first, std::move(vals));
    return out;
}

EnsoIndexSeries read_enso_index(const std::filesystem::path& path, IndexKind kind, const IndexParseOptions& options) {
    return parse_enso_index(read_text_file(path), kind, options);
}

// ---------------------------------------------------------------------------
// Ensemble members

std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Historical: return "historical";
        case Scenario::SSP2_45: return "ssp245";
        case Scenario::SSP5_85: return "ssp585";
    }
    return "?";
}

Scenario parse_scenario(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "historical" || key == "hist") return Scenario::Historical;
    if (key == "ssp245" || key == "ssp2") return Scenario::SSP2_45;
    if (key == "ssp585" || key == "ssp5") return Scenario::SSP5_85;
    throw Error(ErrorCode::Config, "unknown scenario '" + std::string(name) + "'");
}

ModelSeries parse_model_frequency_csv(std::string_view text, std::string model, Scenario scenario) {
    SeriesTable table = read_series_table(text);
    ModelSeries m;
    m.model = std::move(model);
    m.scenario = scenario;
    for (auto& [name, s] : table) {
        auto id = parse_region(name);
        if (!id) throw Error(ErrorCode::Region, "unknown region column '" + name + "' in model table");
        m.heatwave_frequency.emplace(*id, std::move(s));
    }
    if (m.heatwave_frequency.empty()) throw Error(ErrorCode::Empty, "model table has no region columns");
    return m;
}

}  // namespace ensopon
