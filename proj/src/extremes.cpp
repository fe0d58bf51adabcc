#include "ensopon/extremes.hpp"

#include <algorithm>
#include <cmath>

#include "ensopon/csv.hpp"
#include "ensopon/error.hpp"
#include "ensopon/parallel.hpp"

namespace ensopon {

std::string_view extreme_kind_name(ExtremeKind k) {
    switch (k) {
        case ExtremeKind::Heatwave: return "heatwave";
        case ExtremeKind::ColdSnap: return "coldsnap";
        case ExtremeKind::ExtremePrecip: return "precip";
    }
    return "?";
}

ExtremeKind parse_extreme_kind(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "heatwave" || key == "heat" || key == "dheat") return ExtremeKind::Heatwave;
    if (key == "coldsnap" || key == "cold" || key == "dcold") return ExtremeKind::ColdSnap;
    if (key == "precip" || key == "extremeprecip" || key == "dprecip") return ExtremeKind::ExtremePrecip;
    throw Error(ErrorCode::Config, "unknown extreme kind '" + std::string(name) + "'");
}

Variable variable_of(ExtremeKind k) { return k == ExtremeKind::ExtremePrecip ? Variable::Precip : Variable::T2m; }

void ExtremeConfig::validate() const {
    auto ok = [](double p) { return p > 0 && p < 100; };
    if (!ok(hot_percentile) || !ok(cold_percentile) || !ok(precip_percentile))
        throw Error(ErrorCode::Domain, "percentiles must lie strictly between 0 and 100");
    if (window_half_width < 0) throw Error(ErrorCode::Domain, "window half-width must be >= 0");
    if (pool_years && pool_years->first > pool_years->last) throw Error(ErrorCode::Domain, "pool years reversed");
}

double ExtremeConfig::percentile_for(ExtremeKind k) const {
    switch (k) {
        case ExtremeKind::Heatwave: return hot_percentile;
        case ExtremeKind::ColdSnap: return cold_percentile;
        case ExtremeKind::ExtremePrecip: return precip_percentile;
    }
    return 0;
}

double nearest_rank_percentile(std::vector<float>& pool, double percentile) {
    if (pool.empty()) return std::nan("");
    const double n = double(pool.size());
    auto rank = int64_t(std::ceil(percentile / 100.0 * n - 1e-9));
    rank = std::clamp<int64_t>(rank, 1, int64_t(pool.size()));
    auto nth = pool.begin() + (rank - 1);
    std::nth_element(pool.begin(), nth, pool.end());
    return *nth;
}

float ThresholdCalendar::threshold(ExtremeKind k, int64_t cell, int leap_doy) const {
    if (leap_doy < 1 || leap_doy > 366) throw Error(ErrorCode::Domain, "day of year out of range");
    int ring = leap_doy <= 59 ? leap_doy - 1 : (leap_doy == 60 ? 58 : leap_doy - 2);
    return at_ring(k, cell, ring);
}

ThresholdCalendar build_thresholds(const DailyGridField& field, const ExtremeConfig& cfg) {
    cfg.validate();
    if (field.ntime < 730) throw Error(ErrorCode::Domain, "threshold building needs at least two years of daily data");

    ThresholdCalendar cal;
    cal.variable = field.variable;
    cal.grid = field.grid;
    std::vector<ExtremeKind> kinds;
    if (field.variable == Variable::T2m) kinds = {ExtremeKind::Heatwave, ExtremeKind::ColdSnap};
    else kinds = {ExtremeKind::ExtremePrecip};

    const int64_t nc = field.grid.cells();
    for (auto k : kinds) cal.thresholds[k].assign(size_t(nc * 365), std::nanf(""));
    cal.cell_valid = field.cell_has_data();

    // ring position and pool eligibility per time step
    std::vector<int16_t> ring(size_t(field.ntime));
    std::vector<uint8_t> in_pool(size_t(field.ntime));
    for (int64_t t = 0; t < field.ntime; ++t) {
        Date d = field.date(t);
        ring[size_t(t)] = int16_t(ring_position(d));
        in_pool[size_t(t)] = !cfg.pool_years || cfg.pool_years->contains(int(d.year()));
    }
    const int width = std::min(cfg.window_half_width, 182);
    const bool wet_only = field.variable == Variable::Precip && cfg.precip_wet_days_only;

    std::vector<std::vector<float>*> tables;
    for (auto k : kinds) tables.push_back(&cal.thresholds[k]);

    parallel_for(nc, cfg.jobs, [&](int64_t cell) {
        if (!cal.cell_valid[size_t(cell)]) return;
        std::vector<std::vector<float>> buckets(365);
        for (int64_t t = 0; t < field.ntime; ++t) {
            if (!in_pool[size_t(t)]) continue;
            float v = field.at(t, cell);
            if (std::isnan(v)) continue;
            if (wet_only && v < cfg.wet_day_threshold) continue;
            buckets[size_t(ring[size_t(t)])].push_back(v);
        }
        std::vector<float> pool;
        for (int q = 0; q < 365; ++q) {
            pool.clear();
            for (int off = -width; off <= width; ++off) {
                const auto& b = buckets[size_t(((q + off) % 365 + 365) % 365)];
                pool.insert(pool.end(), b.begin(), b.end());
            }
            for (size_t i = 0; i < kinds.size(); ++i)
                (*tables[i])[size_t(cell * 365 + q)] = float(nearest_rank_percentile(pool, cfg.percentile_for(kinds[i])));
        }
    });
    return cal;
}

int64_t DayMask::count(int64_t cell) const {
    int64_t n = 0;
    for (int64_t t = 0; t < ntime; ++t) n += flagged(t, cell);
    return n;
}

DayMask classify_days(const DailyGridField& field, const ThresholdCalendar& thr, ExtremeKind kind, int jobs) {
    if (variable_of(kind) != field.variable)
        throw Error(ErrorCode::Domain, std::string(extreme_kind_name(kind)) + " cannot be classified from " +
                                           std::string(variable_name(field.variable)) + " data");
    if (thr.variable != field.variable || !thr.has(kind))
        throw Error(ErrorCode::Domain, "threshold calendar was built from " + std::string(variable_name(thr.variable)) +
                                           " and has no " + std::string(extreme_kind_name(kind)) + " thresholds");
    if (!(thr.grid == field.grid)) throw Error(ErrorCode::Size, "threshold calendar grid differs from field grid");

    DayMask mask;
    mask.kind = kind;
    mask.grid = field.grid;
    mask.t0 = field.t0;
    mask.ntime = field.ntime;
    const int64_t nc = field.grid.cells();
    mask.flags.assign(size_t(nc * field.ntime), 0);
    mask.cell_valid = thr.cell_valid;

    std::vector<int16_t> ring(size_t(field.ntime));
    for (int64_t t = 0; t < field.ntime; ++t) ring[size_t(t)] = int16_t(ring_position(field.date(t)));

    parallel_for(nc, jobs, [&](int64_t cell) {
        if (!mask.cell_valid[size_t(cell)]) return;
        for (int64_t t = 0; t < field.ntime; ++t) {
            float v = field.at(t, cell);
            float th = thr.at_ring(kind, cell, ring[size_t(t)]);
            if (std::isnan(v) || std::isnan(th)) continue;
            bool hit = kind == ExtremeKind::ColdSnap ? v < th : v > th;
            mask.flags[size_t(t * nc + cell)] = hit;
        }
    });
    return mask;
}

MonthlyTimeSeries ExtremeFrequencySeries::cell_series(int64_t cell) const {
    std::vector<double> vals(size_t(counts.nmonths));
    for (int64_t m = 0; m < counts.nmonths; ++m) vals[size_t(m)] = counts.at(m, cell);
    return MonthlyTimeSeries(counts.start, std::move(vals));
}

ExtremeFrequencySeries monthly_frequency(const DayMask& mask) {
    ExtremeFrequencySeries out;
    out.kind = mask.kind;
    auto& f = out.counts;
    f.grid = mask.grid;
    f.cell_valid = mask.cell_valid;
    if (mask.ntime == 0) return out;
    f.start = year_month_of(from_epoch_day(mask.t0));
    YearMonth last = year_month_of(from_epoch_day(mask.t0 + mask.ntime - 1));
    f.nmonths = (last - f.start) + 1;
    const int64_t nc = mask.grid.cells();
    f.values.assign(size_t(f.nmonths * nc), 0.0f);
    std::vector<int64_t> month_of(size_t(mask.ntime));
    for (int64_t t = 0; t < mask.ntime; ++t) month_of[size_t(t)] = year_month_of(from_epoch_day(mask.t0 + t)) - f.start;
    for (int64_t t = 0; t < mask.ntime; ++t) {
        const int64_t m = month_of[size_t(t)];
        for (int64_t c = 0; c < nc; ++c)
            if (mask.flags[size_t(t * nc + c)]) f.values[size_t(m * nc + c)] += 1.0f;
    }
    for (int64_t c = 0; c < nc; ++c)
        if (!f.cell_valid[size_t(c)])
            for (int64_t m = 0; m < f.nmonths; ++m) f.values[size_t(m * nc + c)] = std::nanf("");
    return out;
}

MonthlyTimeSeries regional_frequency(const ExtremeFrequencySeries& freq, const RegionMap& map, RegionId region,
                                     RegionAggregation how) {
    const auto& f = freq.counts;
    std::vector<int64_t> cells;
    for (int64_t c : map.cells_of(f.grid, region))
        if (f.cell_valid[size_t(c)]) cells.push_back(c);
    if (cells.empty())
        throw Error(ErrorCode::Region, "region " + std::string(region_code(region)) + " has no valid grid cells");

    std::vector<double> weights(cells.size(), 1.0);
    if (how == RegionAggregation::AreaWeighted)
        for (size_t i = 0; i < cells.size(); ++i)
            weights[i] = std::cos(f.grid.lat(cells[i] / f.grid.nlon) * M_PI / 180.0);
    double wsum = 0;
    for (double w : weights) wsum += w;

    std::vector<double> vals(size_t(f.nmonths));
    for (int64_t m = 0; m < f.nmonths; ++m) {
        if (how == RegionAggregation::Max) {
            double mx = -INFINITY;
            for (int64_t c : cells) mx = std::max(mx, double(f.at(m, c)));
            vals[size_t(m)] = mx;
        } else {
            double s = 0;
            for (size_t i = 0; i < cells.size(); ++i) s += weights[i] * double(f.at(m, cells[i]));
            vals[size_t(m)] = s / wsum;
        }
    }
    return MonthlyTimeSeries(f.start, std::move(vals));
}

std::map<RegionId, MonthlyTimeSeries> regional_frequencies(const ExtremeFrequencySeries& freq, const RegionMap& map,
                                                           RegionAggregation how) {
    std::map<RegionId, MonthlyTimeSeries> out;
    auto assigned = map.assign_cells(freq.counts.grid);
    for (RegionId id : kAllRegions) {
        bool any = false;
        for (size_t c = 0; c < assigned.size() && !any; ++c) any = assigned[c] == id && freq.counts.cell_valid[c];
        if (any) out.emplace(id, regional_frequency(freq, map, id, how));
    }
    return out;
}

ExtremeFrequencySeries extreme_frequency(const DailyGridField& field, const ExtremeConfig& cfg, ExtremeKind kind) {
    auto thr = build_thresholds(field, cfg);
    return monthly_frequency(classify_days(field, thr, kind, cfg.jobs));
}

}  // namespace ensopon
