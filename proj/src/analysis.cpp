#include "ensopon/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "ensopon/error.hpp"
#include "ensopon/parallel.hpp"

namespace ensopon {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

LagScanOptions scan_options(const CorrelationSettings& s) {
    LagScanOptions o;
    o.k_min = s.k_min;
    o.k_max = s.k_max;
    o.mode = s.mode;
    o.norm = s.norm;
    o.min_samples = s.min_samples;
    o.method = s.method;
    o.permutations = s.permutations;
    o.seed = s.seed;
    return o;
}

}  // namespace

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::LaNina: return "la_nina";
        case Phase::ElNino: return "el_nino";
        case Phase::Neutral: return "neutral";
    }
    return "?";
}

std::optional<std::pair<Phase, double>> PhaseSeries::at(YearMonth ym) const {
    int64_t t = ym - start;
    if (t < 0 || t >= int64_t(labels.size()) || !valid[size_t(t)]) return std::nullopt;
    return std::pair{labels[size_t(t)], index[size_t(t)]};
}

PhaseSeries classify_phase(const MonthlyTimeSeries& mei, double threshold) {
    if (!(threshold >= 0)) throw Error(ErrorCode::Domain, "phase threshold must be non-negative");
    PhaseSeries out;
    out.start = mei.start;
    out.index = mei.values;
    out.valid = mei.valid;
    out.labels.resize(mei.size(), Phase::Neutral);
    for (size_t t = 0; t < mei.size(); ++t) {
        if (!mei.valid[t]) continue;
        double v = mei.values[t];
        if (v < -threshold) out.labels[t] = Phase::LaNina;
        else if (v > threshold) out.labels[t] = Phase::ElNino;
    }
    return out;
}

std::string_view season_name(Season s) {
    switch (s) {
        case Season::MAM: return "MAM";
        case Season::JJA: return "JJA";
        case Season::SON: return "SON";
        case Season::DJF: return "DJF";
    }
    return "?";
}

Season parse_season(std::string_view name) {
    for (Season s : kAllSeasons) {
        auto n = season_name(s);
        if (name.size() == n.size() &&
            std::equal(name.begin(), name.end(), n.begin(), [](char a, char b) { return std::toupper(a) == b; }))
            return s;
    }
    throw Error(ErrorCode::Config, "unknown season: " + std::string(name));
}

Season season_of_month(int month) {
    switch (month) {
        case 3: case 4: case 5: return Season::MAM;
        case 6: case 7: case 8: return Season::JJA;
        case 9: case 10: case 11: return Season::SON;
        case 12: case 1: case 2: return Season::DJF;
    }
    throw Error(ErrorCode::Domain, "month out of range");
}

std::set<int> season_months(Season s) {
    switch (s) {
        case Season::MAM: return {3, 4, 5};
        case Season::JJA: return {6, 7, 8};
        case Season::SON: return {9, 10, 11};
        case Season::DJF: return {12, 1, 2};
    }
    return {};
}

SeasonSpec season_spec(Season s) {
    switch (s) {
        case Season::MAM: return {s, 3};
        case Season::JJA: return {s, 6};
        case Season::SON: return {s, 9};
        case Season::DJF: return {s, 0};
    }
    return {s, 0};
}

int season_year(YearMonth ym) { return ym.month == 12 ? ym.year + 1 : ym.year; }

Phase phase_for_outage(YearMonth outage_month, const PhaseSeries& phases) {
    const SeasonSpec spec = season_spec(season_of_month(outage_month.month));
    const YearMonth target = outage_month - spec.lag_months;
    if (target < phases.start)
        throw Error(ErrorCode::Coverage, "ENSO series starts after " + target.to_string() + ", needed for outage month " +
                                             outage_month.to_string());
    auto primary = phases.at(target);
    if (primary && primary->first != Phase::Neutral) return primary->first;

    std::optional<std::pair<Phase, double>> pick;
    bool any_valid = primary.has_value();
    for (int d = 1; d <= spec.tolerance; ++d) {
        for (YearMonth ym : {target - d, target + d}) {
            auto c = phases.at(ym);
            if (!c) continue;
            any_valid = true;
            if (c->first == Phase::Neutral) continue;
            if (!pick || std::abs(c->second) > std::abs(pick->second)) pick = c;
        }
        if (pick) return pick->first;
    }
    if (!any_valid)
        throw Error(ErrorCode::Coverage, "no valid ENSO value near " + target.to_string() + " for outage month " +
                                             outage_month.to_string());
    return Phase::Neutral;
}

CompositeResult composite_pon_by_phase(const MonthlyTimeSeries& pon, const PhaseSeries& phases,
                                       const std::vector<Season>& seasons, double alpha) {
    if (seasons.empty()) throw Error(ErrorCode::Domain, "composite needs at least one season");
    CompositeResult out;
    out.seasons = seasons;
    std::set<int> months;
    for (Season s : seasons)
        for (int m : season_months(s)) months.insert(m);

    for (size_t t = 0; t < pon.size(); ++t) {
        if (!pon.valid[t]) continue;
        YearMonth ym = pon.month_at(t);
        if (!months.count(ym.month)) continue;
        Phase ph;
        try {
            ph = phase_for_outage(ym, phases);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Coverage) throw;
            ++out.unassigned;
            continue;
        }
        out.samples[size_t(ph)].push_back(pon.values[t]);
    }
    double total = 0;
    int64_t n = 0;
    for (size_t g = 0; g < 3; ++g) {
        const auto& v = out.samples[g];
        out.sizes[g] = int64_t(v.size());
        out.means[g] = v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
        total += std::accumulate(v.begin(), v.end(), 0.0);
        n += int64_t(v.size());
        if (v.size() < 2)
            throw Error(ErrorCode::Empty, "phase group " + std::string(phase_name(Phase(g))) + " has " +
                                              std::to_string(v.size()) + " samples; at least 2 needed");
    }
    out.grand_mean = total / double(n);
    out.hsd = tukey_hsd({out.samples[0], out.samples[1], out.samples[2]}, alpha);
    return out;
}

SignConvention default_sign(IndexKind k) {
    return k == IndexKind::SOI ? SignConvention::PositiveAnomaly : SignConvention::NegativeAnomaly;
}

std::string IntensityProxy::label() const {
    return std::string(index_name(kind)) + (sign == SignConvention::NegativeAnomaly ? "-" : "+");
}

IntensityProxy make_proxy(IndexKind kind, const MonthlyTimeSeries& preprocessed) {
    return make_proxy(kind, preprocessed, default_sign(kind));
}

IntensityProxy make_proxy(IndexKind kind, const MonthlyTimeSeries& preprocessed, SignConvention sign) {
    IntensityProxy p;
    p.kind = kind;
    p.sign = sign;
    p.series = preprocessed;
    for (size_t t = 0; t < p.series.size(); ++t) {
        if (!p.series.valid[t]) continue;
        double v = p.series.values[t];
        bool keep = sign == SignConvention::NegativeAnomaly ? v < 0 : v > 0;
        if (!keep) {
            p.series.valid[t] = false;
            p.series.values[t] = kNaN;
        }
    }
    return p;
}

AlignedPair align(const MonthlyTimeSeries& x, const MonthlyTimeSeries& y) {
    if (x.empty() || y.empty()) throw Error(ErrorCode::Empty, "cannot align an empty series");
    AlignedPair p;
    p.start = std::min(x.start, y.start);
    const YearMonth end = std::max(x.last(), y.last());
    const size_t n = size_t(end - p.start + 1);
    p.x.assign(n, 0.0);
    p.y.assign(n, 0.0);
    p.xv.assign(n, false);
    p.yv.assign(n, false);
    auto fill = [&](const MonthlyTimeSeries& s, std::vector<double>& v, std::vector<bool>& ok) {
        const size_t off = size_t(s.start - p.start);
        for (size_t t = 0; t < s.size(); ++t) {
            if (!s.valid[t]) continue;
            v[off + t] = s.values[t];
            ok[off + t] = true;
        }
    };
    fill(x, p.x, p.xv);
    fill(y, p.y, p.yv);
    return p;
}

void restrict_y_to_seasons(AlignedPair& p, const std::vector<Season>& seasons) {
    if (seasons.empty()) return;
    std::set<int> months;
    for (Season s : seasons)
        for (int m : season_months(s)) months.insert(m);
    for (size_t t = 0; t < p.y.size(); ++t)
        if (!months.count((p.start + int64_t(t)).month)) p.yv[t] = false;
}

Permuter calendar_year_permuter(YearMonth start, int64_t length) {
    if (length <= 0) throw Error(ErrorCode::Empty, "permuter needs a non-empty series");
    const int y0 = start.year;
    const int y1 = (start + (length - 1)).year;
    return [start, length, y0, y1](std::mt19937_64& rng) {
        std::vector<int> years(size_t(y1 - y0 + 1));
        std::iota(years.begin(), years.end(), y0);
        std::shuffle(years.begin(), years.end(), rng);
        std::vector<int64_t> idx(static_cast<size_t>(length));
        for (int64_t t = 0; t < length; ++t) {
            YearMonth ym = start + t;
            int64_t src = YearMonth{years[size_t(ym.year - y0)], ym.month} - start;
            idx[size_t(t)] = src >= 0 && src < length ? src : -1;
        }
        return idx;
    };
}

bool is_significant(const CorrelationResult& r, const CorrelationSettings& s) {
    if (!r.computable || std::isnan(r.p_value) || !(r.p_value < s.alpha)) return false;
    switch (s.mode) {
        case CcMode::MostNegative: return r.r < 0;
        case CcMode::MostPositive: return r.r > 0;
        case CcMode::MaxAbs: return true;
    }
    return false;
}

CorrelationSettings oriented(CorrelationSettings s, SignConvention sign) {
    if (sign == SignConvention::PositiveAnomaly) {
        if (s.mode == CcMode::MostNegative) s.mode = CcMode::MostPositive;
        else if (s.mode == CcMode::MostPositive) s.mode = CcMode::MostNegative;
    }
    return s;
}

LagScanResult correlate(const MonthlyTimeSeries& x, const MonthlyTimeSeries& y, const std::vector<Season>& seasons,
                        const CorrelationSettings& s) {
    AlignedPair a = align(x, y);
    restrict_y_to_seasons(a, seasons);
    LagScanOptions o = scan_options(s);
    if (s.method == SignificanceMethod::Permutation) o.permuter = calendar_year_permuter(a.start, int64_t(a.y.size()));
    return lag_scan(a.x, a.xv, a.y, a.yv, o);
}

const CcTableCell* CcTable::find(std::string_view target, IndexKind index) const {
    for (const auto& c : cells)
        if (c.target == target && c.index == index) return &c;
    return nullptr;
}

CcTable region_index_cc_table(const std::vector<IntensityProxy>& proxies, const RegionalPon& pon,
                              const std::vector<RegionId>& regions, Season season, const CorrelationSettings& s) {
    CcTable table;
    table.season = season;
    std::vector<std::pair<std::string, const MonthlyTimeSeries*>> targets;
    targets.emplace_back("US", &pon.all_us);
    for (RegionId r : regions) {
        auto it = pon.regions.find(r);
        if (it == pon.regions.end())
            throw Error(ErrorCode::Region, "no PON series for region " + std::string(region_code(r)));
        targets.emplace_back(std::string(region_code(r)), &it->second);
    }
    for (size_t ti = 0; ti < targets.size(); ++ti) {
        for (size_t pi = 0; pi < proxies.size(); ++pi) {
            CorrelationSettings cs = oriented(s, proxies[pi].sign);
            cs.seed = mix_seed(s.seed, ti * 64 + pi);
            CcTableCell cell;
            cell.target = targets[ti].first;
            cell.index = proxies[pi].kind;
            cell.proxy_label = proxies[pi].label();
            cell.result = correlate(proxies[pi].series, *targets[ti].second, {season}, cs).best;
            cell.significant = is_significant(cell.result, cs);
            table.cells.push_back(cell);
        }
    }
    for (const auto& p : proxies) {
        CcTableSummary sum{p.kind};
        for (const auto& c : table.cells) {
            if (c.index != p.kind || c.target == "US") continue;
            ++sum.regions;
            if (c.significant) ++sum.significant_regions;
        }
        sum.majority = 2 * sum.significant_regions > sum.regions;
        table.summary.push_back(sum);
    }
    return table;
}

LagScanResult delay_curve(const IntensityProxy& proxy, const MonthlyTimeSeries& pon, const std::vector<Season>& seasons,
                          CorrelationSettings s) {
    return correlate(proxy.series, pon, seasons, oriented(s, proxy.sign));
}

PhaseScatter phase_scatter(const MonthlyTimeSeries& index, const MonthlyTimeSeries& pon, const PhaseSeries& phases,
                           Season season) {
    PhaseScatter out;
    const auto months = season_months(season);
    const int lag = season_spec(season).lag_months;
    std::array<double, 3> sums{};
    for (size_t t = 0; t < pon.size(); ++t) {
        if (!pon.valid[t]) continue;
        YearMonth ym = pon.month_at(t);
        if (!months.count(ym.month)) continue;
        auto iv = index.at(ym - lag);
        if (!iv) continue;
        Phase ph;
        try {
            ph = phase_for_outage(ym, phases);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Coverage) throw;
            continue;
        }
        out.points.push_back({ym, *iv, pon.values[t], ph});
        sums[size_t(ph)] += pon.values[t];
        ++out.phase_sizes[size_t(ph)];
    }
    for (size_t g = 0; g < 3; ++g) out.phase_means[g] = out.phase_sizes[g] ? sums[g] / double(out.phase_sizes[g]) : kNaN;
    return out;
}

CellSeriesGrid preprocess_cells(const ExtremeFrequencySeries& freq, YearRange climatology, int jobs) {
    CellSeriesGrid out;
    out.grid = freq.counts.grid;
    out.cell_valid = freq.counts.cell_valid;
    const int64_t n = out.grid.cells();
    out.cells.resize(size_t(n));
    parallel_for(n, jobs, [&](int64_t c) {
        if (!out.cell_valid[size_t(c)]) return;
        out.cells[size_t(c)] = preprocess(freq.cell_series(c), climatology);
    });
    return out;
}

double MediationMap::flag_rate() const {
    if (cells.empty()) return 0.0;
    auto flagged = std::count_if(cells.begin(), cells.end(), [](const MediationCell& c) { return c.flag; });
    return double(flagged) / double(cells.size());
}

MediationMap mediation_maps(const IntensityProxy& proxy, const CellSeriesGrid& extremes, ExtremeKind kind,
                            const RegionalPon& pon, const RegionMap& map, const std::vector<RegionId>& eligible,
                            const std::vector<Season>& seasons, const MediationSettings& s) {
    MediationMap out;
    out.kind = kind;
    out.seasons = seasons;
    out.grid = extremes.grid;
    const auto assignment = map.assign_cells(extremes.grid);
    const std::set<RegionId> ok(eligible.begin(), eligible.end());
    for (int64_t c = 0; c < extremes.grid.cells(); ++c) {
        if (!extremes.cell_valid[size_t(c)]) continue;
        const auto& r = assignment[size_t(c)];
        if (!r) {
            ++out.unassigned_cells;
            continue;
        }
        if (!ok.count(*r)) {
            ++out.ineligible_cells;
            continue;
        }
        MediationCell mc;
        mc.cell = c;
        mc.lat = extremes.grid.lat(c / extremes.grid.nlon);
        mc.lon = extremes.grid.lon(c % extremes.grid.nlon);
        mc.region = *r;
        out.cells.push_back(mc);
    }
    parallel_for(int64_t(out.cells.size()), s.jobs, [&](int64_t i) {
        MediationCell& mc = out.cells[size_t(i)];
        const MonthlyTimeSeries& d = extremes.cells[size_t(mc.cell)];
        const MonthlyTimeSeries& target = s.target == PonTarget::AllUs ? pon.all_us : pon.regions.at(mc.region);
        CorrelationSettings s1 = oriented(s.index_vs_extreme, proxy.sign), s2 = s.extreme_vs_pon;
        s1.seed = mix_seed(s1.seed, uint64_t(mc.cell) * 2);
        s2.seed = mix_seed(s2.seed, uint64_t(mc.cell) * 2 + 1);
        mc.index_vs_extreme = correlate(proxy.series, d, seasons, s1).best;
        mc.extreme_vs_pon = correlate(d, target, seasons, s2).best;
        mc.index_significant = is_significant(mc.index_vs_extreme, s1);
        mc.pon_significant = is_significant(mc.extreme_vs_pon, s2);
        mc.flag = mc.index_significant && mc.pon_significant;
    });
    return out;
}

}  // namespace ensopon
