#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/calendar.hpp"
#include "ensopon/region_map.hpp"
#include "ensopon/series.hpp"

namespace ensopon {

// ---------------------------------------------------------------------------
// Outage records

enum class CauseCategory { SevereWeather, Other };

struct OutageRecord {
    std::string event_id;
    Date begin_date;
    std::string state;  // two-letter continental code
    CauseCategory cause_category = CauseCategory::Other;
    std::string cause_text;
    std::optional<int64_t> customers_affected;
    std::optional<double> demand_loss_mw;

    bool operator==(const OutageRecord&) const = default;
};

/// Header names accepted for each field. Matching ignores case, spaces and
/// punctuation. DOE-417 vintages renamed columns over the years.
struct ColumnAliases {
    std::vector<std::string> event_id{"event_id", "id", "event id", "incident id"};
    std::vector<std::string> begin_date{"begin_date", "date event began", "event date", "date began",
                                        "datetime event began", "event began", "start date", "date"};
    std::vector<std::string> state{"state", "area affected", "area_affected", "state affected"};
    std::vector<std::string> cause{"cause", "event type", "event_type", "type of disturbance",
                                   "cause category", "tags"};
    std::vector<std::string> customers{"customers_affected", "number of customers affected",
                                       "customers affected", "customers"};
    std::vector<std::string> demand_loss{"demand_loss_mw", "demand loss (mw)", "demand loss", "loss (megawatts)",
                                         "demand_loss"};
};

/// Cause strings that count as severe weather. A cause matches when one of
/// its words contains a pattern (patterns of three letters or fewer must
/// equal a whole word).
struct CauseFilter {
    std::vector<std::string> severe_weather{"weather", "storm", "hurricane", "tornado", "wind", "lightning",
                                            "flood", "heat", "cold", "ice", "snow", "blizzard", "wildfire",
                                            "tropical", "derecho", "freez", "hail"};

    CauseCategory classify(std::string_view cause) const;
};

struct OutageParseOptions {
    MonthRange window = kDefaultStudyWindow;
    ColumnAliases aliases;
    CauseFilter causes;
    bool severe_weather_only = true;
};

struct DropCounts {
    int64_t incomplete = 0;       // empty begin date, state or cause
    int64_t bad_date = 0;         // unparseable begin date
    int64_t unknown_state = 0;    // state text not recognizable
    int64_t non_continental = 0;  // Alaska, Hawaii
    int64_t out_of_window = 0;
    int64_t not_weather = 0;      // cause outside the allow-list

    int64_t total() const {
        return incomplete + bad_date + unknown_state + non_continental + out_of_window + not_weather;
    }
};

struct OutageParseResult {
    std::vector<OutageRecord> records;
    DropCounts dropped;
};

OutageParseResult parse_outage_records(std::string_view table_text, const OutageParseOptions& options = {});
OutageParseResult read_outage_records(const std::filesystem::path& path, const OutageParseOptions& options = {});
void write_outage_records(std::ostream& out, const std::vector<OutageRecord>& records);

// ---------------------------------------------------------------------------
// Monthly power-outage numbers

struct RegionalPon {
    std::map<RegionId, MonthlyTimeSeries> regions;
    MonthlyTimeSeries all_us;

    /// Column "US" plus one column per region code.
    SeriesTable as_table() const;
    static RegionalPon from_table(const SeriesTable& table);
    int64_t total_events() const;
};

/// Counts events by the month of their begin date. Every region in the map
/// gets a series spanning the window.
RegionalPon monthly_pon(const std::vector<OutageRecord>& records, const RegionMap& map,
                        MonthRange window = kDefaultStudyWindow);

struct EligibleRegions {
    std::vector<RegionId> eligible;
    std::vector<RegionId> excluded;
    std::map<RegionId, int64_t> totals;
    std::vector<std::string> warnings;
};

/// Regions with fewer than `threshold` events in total are excluded.
EligibleRegions exclude_sparse_regions(const RegionalPon& pon, int64_t threshold = 20);

// ---------------------------------------------------------------------------
// ENSO indices

enum class IndexKind { MEI, Nino34, Nino3, Nino4, SOI };

inline constexpr IndexKind kAllIndices[] = {IndexKind::MEI, IndexKind::Nino34, IndexKind::Nino3, IndexKind::Nino4,
                                            IndexKind::SOI};

std::string_view index_name(IndexKind k);
IndexKind parse_index_kind(std::string_view name);

struct EnsoIndexSeries {
    IndexKind kind = IndexKind::MEI;
    MonthlyTimeSeries values;
};

struct IndexParseOptions {
    MonthRange window = kDefaultStudyWindow;
    /// Months before the window kept when available (needed for lagged lookups).
    int lead_months = 12;
    /// Values at or below this are treated as missing (-99.99, -999 ...).
    double missing_at_or_below = -99.0;
};

/// Accepts `date,value`, `year,month,value`, or wide `year,jan..dec` tables.
/// The result is gapless from its first month through the window end.
EnsoIndexSeries parse_enso_index(std::string_view table_text, IndexKind kind, const IndexParseOptions& options = {});
EnsoIndexSeries read_enso_index(const std::filesystem::path& path, IndexKind kind,
                                const IndexParseOptions& options = {});

// ---------------------------------------------------------------------------
// Climate-model ensemble members

enum class Scenario { Historical, SSP2_45, SSP5_85 };

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

/// Regional heatwave-day frequencies of one model under one scenario.
struct ModelSeries {
    std::string model;
    Scenario scenario = Scenario::SSP2_45;
    std::map<RegionId, MonthlyTimeSeries> heatwave_frequency;
};

/// Wide CSV: `date` plus one column per region code with monthly D_heat.
ModelSeries parse_model_frequency_csv(std::string_view text, std::string model, Scenario scenario);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace ensopon
