#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "ensopon/grid.hpp"
#include "ensopon/region_map.hpp"
#include "ensopon/series.hpp"
#include "ensopon/timeseries.hpp"

namespace ensopon {

enum class ExtremeKind { Heatwave, ColdSnap, ExtremePrecip };

inline constexpr ExtremeKind kAllExtremeKinds[] = {ExtremeKind::Heatwave, ExtremeKind::ColdSnap,
                                                   ExtremeKind::ExtremePrecip};

std::string_view extreme_kind_name(ExtremeKind k);  // "heatwave", "coldsnap", "precip"
ExtremeKind parse_extreme_kind(std::string_view name);
Variable variable_of(ExtremeKind k);

struct ExtremeConfig {
    int window_half_width = 15;  // days either side of the target day
    double hot_percentile = 95;
    double cold_percentile = 5;
    double precip_percentile = 95;
    /// Pool only wet days (value >= wet_day_threshold) for precipitation.
    bool precip_wet_days_only = false;
    double wet_day_threshold = 1.0;
    /// Restrict pools to these calendar years; all years when unset.
    std::optional<YearRange> pool_years;
    int jobs = 1;

    void validate() const;  // throws E_DOMAIN
    double percentile_for(ExtremeKind k) const;
};

/// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n) of the
/// sorted sample (rank clamped to [1, n]). Reorders `pool`.
double nearest_rank_percentile(std::vector<float>& pool, double percentile);

/// Per cell and day-of-year thresholds for the kinds that apply to a variable.
/// Stored on the 365-position ring; Feb 29 reads Feb 28's entry.
struct ThresholdCalendar {
    Variable variable = Variable::T2m;
    GridGeometry grid;
    std::vector<bool> cell_valid;
    std::map<ExtremeKind, std::vector<float>> thresholds;  // [cell * 365 + ring position]

    bool has(ExtremeKind k) const { return thresholds.count(k) > 0; }
    float at_ring(ExtremeKind k, int64_t cell, int ring_pos) const {
        return thresholds.at(k)[size_t(cell * 365 + ring_pos)];
    }
    /// Leap-calendar day of year 1..366.
    float threshold(ExtremeKind k, int64_t cell, int leap_doy) const;
    float for_date(ExtremeKind k, int64_t cell, const Date& d) const { return at_ring(k, cell, ring_position(d)); }
};

/// Pools every value whose ring position lies within the window of the target
/// day, across all (or the configured) years, and takes the nearest-rank
/// percentile. Requires at least two years (730 days) of data.
ThresholdCalendar build_thresholds(const DailyGridField& field, const ExtremeConfig& cfg);

/// Per-cell daily flags, time-major like the field.
struct DayMask {
    ExtremeKind kind = ExtremeKind::Heatwave;
    GridGeometry grid;
    int64_t t0 = 0;
    int64_t ntime = 0;
    std::vector<uint8_t> flags;
    std::vector<bool> cell_valid;

    bool flagged(int64_t t, int64_t cell) const { return flags[size_t(t * grid.cells() + cell)] != 0; }
    int64_t count(int64_t cell) const;
};

/// Strict comparisons: heatwave value > threshold, cold snap value < threshold,
/// extreme precipitation value > threshold.
DayMask classify_days(const DailyGridField& field, const ThresholdCalendar& thr, ExtremeKind kind, int jobs = 1);

/// Monthly counts of flagged days per cell.
struct ExtremeFrequencySeries {
    ExtremeKind kind = ExtremeKind::Heatwave;
    MonthlyGridField counts;

    MonthlyTimeSeries cell_series(int64_t cell) const;
};

ExtremeFrequencySeries monthly_frequency(const DayMask& mask);

enum class RegionAggregation { Mean, AreaWeighted, Max };

/// Aggregates the region's valid cells month by month. Throws E_REGION when
/// the region has no valid cell on this grid.
MonthlyTimeSeries regional_frequency(const ExtremeFrequencySeries& freq, const RegionMap& map, RegionId region,
                                     RegionAggregation how = RegionAggregation::Mean);

/// All regions that own at least one valid cell.
std::map<RegionId, MonthlyTimeSeries> regional_frequencies(const ExtremeFrequencySeries& freq, const RegionMap& map,
                                                           RegionAggregation how = RegionAggregation::Mean);

/// build_thresholds + classify_days + monthly_frequency for one kind.
ExtremeFrequencySeries extreme_frequency(const DailyGridField& field, const ExtremeConfig& cfg, ExtremeKind kind);

}  // namespace ensopon
