#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/extremes.hpp"
#include "ensopon/ingest.hpp"
#include "ensopon/stats.hpp"
#include "ensopon/timeseries.hpp"

namespace ensopon {

// ---------------------------------------------------------------------------
// ENSO phases and seasons

enum class Phase { LaNina = 0, ElNino = 1, Neutral = 2 };

std::string_view phase_name(Phase p);

struct PhaseSeries {
    YearMonth start;
    std::vector<Phase> labels;
    std::vector<double> index;  // the smoothed index the labels came from
    std::vector<bool> valid;

    size_t size() const { return labels.size(); }
    /// Label and index value at a month, nullopt outside the span or where invalid.
    std::optional<std::pair<Phase, double>> at(YearMonth ym) const;
};

/// MEI < -threshold -> La Niña, MEI > +threshold -> El Niño, else neutral.
PhaseSeries classify_phase(const MonthlyTimeSeries& mei, double threshold = 0.5);

enum class Season { MAM, JJA, SON, DJF };

inline constexpr Season kAllSeasons[] = {Season::MAM, Season::JJA, Season::SON, Season::DJF};

std::string_view season_name(Season s);
Season parse_season(std::string_view name);
Season season_of_month(int month);
std::set<int> season_months(Season s);

/// Months between the ENSO lookup and the outage month.
struct SeasonSpec {
    Season season;
    int lag_months;
    int tolerance = 1;
};

SeasonSpec season_spec(Season s);  // MAM 3, JJA 6, SON 9, DJF 0

/// Season-year: December belongs to the following year's DJF.
int season_year(YearMonth ym);

/// Phase assigned to an outage month: the label `lag` months earlier; if that
/// month is neutral, the lag±1 months are checked and a non-neutral label is
/// adopted if exactly one qualifies; conflicting labels resolve to the larger
/// |index|. Throws E_COVERAGE when the lag month precedes the series.
Phase phase_for_outage(YearMonth outage_month, const PhaseSeries& phases);

// ---------------------------------------------------------------------------
// Composites

struct CompositeResult {
    std::vector<Season> seasons;
    std::array<std::vector<double>, 3> samples;  // indexed by Phase
    std::array<double, 3> means{};
    std::array<int64_t, 3> sizes{};
    double grand_mean = 0;
    int64_t unassigned = 0;  // season months whose phase could not be determined
    HsdResult hsd;  // groups in Phase order; hsd.anova carries the ANOVA table
};

/// Groups the season's monthly PON values by the phase assigned to each month
/// and runs ANOVA + Tukey HSD. Throws E_EMPTY when a group has < 2 samples.
CompositeResult composite_pon_by_phase(const MonthlyTimeSeries& pon, const PhaseSeries& phases,
                                       const std::vector<Season>& seasons, double alpha = 0.05);

// ---------------------------------------------------------------------------
// Intensity proxies and correlation tables

enum class SignConvention { NegativeAnomaly, PositiveAnomaly };

SignConvention default_sign(IndexKind k);  // SOI positive, all others negative

struct IntensityProxy {
    IndexKind kind = IndexKind::MEI;
    SignConvention sign = SignConvention::NegativeAnomaly;
    MonthlyTimeSeries series;  // valid only where the qualifying sign holds

    std::string label() const;  // "MEI-", "SOI+"
};

/// Restricts a preprocessed index to its qualifying sign.
IntensityProxy make_proxy(IndexKind kind, const MonthlyTimeSeries& preprocessed);
IntensityProxy make_proxy(IndexKind kind, const MonthlyTimeSeries& preprocessed, SignConvention sign);

/// Two series on a common monthly axis (the union of both spans).
struct AlignedPair {
    YearMonth start;
    std::vector<double> x, y;
    std::vector<bool> xv, yv;
};

AlignedPair align(const MonthlyTimeSeries& x, const MonthlyTimeSeries& y);

/// Invalidates y outside the given seasons (no-op for an empty list).
void restrict_y_to_seasons(AlignedPair& p, const std::vector<Season>& seasons);

/// Permutes whole calendar years of a series laid out from `start` with
/// `length` months; months without a source become missing.
Permuter calendar_year_permuter(YearMonth start, int64_t length);

struct CorrelationSettings {
    int k_min = 0;
    int k_max = 12;
    CcMode mode = CcMode::MostNegative;
    CcNormalization norm = CcNormalization::Overlap;
    int64_t min_samples = 8;
    double alpha = 0.05;
    SignificanceMethod method = SignificanceMethod::TTest;
    int permutations = 999;
    uint64_t seed = 0;
};

bool is_significant(const CorrelationResult& r, const CorrelationSettings& s);

/// Modes are stated for negative-anomaly proxies; a positive-anomaly proxy
/// (SOI+) swaps most_negative and most_positive.
CorrelationSettings oriented(CorrelationSettings s, SignConvention sign);

/// Lag scan of x leading y; y restricted to `seasons`.
LagScanResult correlate(const MonthlyTimeSeries& x, const MonthlyTimeSeries& y, const std::vector<Season>& seasons,
                        const CorrelationSettings& s);

struct CcTableCell {
    std::string target;  // "US" or region code
    IndexKind index = IndexKind::MEI;
    std::string proxy_label;
    CorrelationResult result;
    bool significant = false;
};

struct CcTableSummary {
    IndexKind index;
    int significant_regions = 0;
    int regions = 0;
    bool majority = false;  // significant in more than half of the regions
};

struct CcTable {
    Season season = Season::MAM;
    std::vector<CcTableCell> cells;  // US row first, then regions, each across proxies
    std::vector<CcTableSummary> summary;

    const CcTableCell* find(std::string_view target, IndexKind index) const;
};

/// Max CC per (target, proxy) over the season-restricted PON samples. Cells
/// with fewer than `min_samples` pairs are marked not computable.
CcTable region_index_cc_table(const std::vector<IntensityProxy>& proxies, const RegionalPon& pon_preprocessed,
                              const std::vector<RegionId>& regions, Season season, const CorrelationSettings& s);

/// Full signed-lag curve r(k) of the proxy leading PON, per-lag significance.
LagScanResult delay_curve(const IntensityProxy& proxy, const MonthlyTimeSeries& pon,
                          const std::vector<Season>& seasons, CorrelationSettings s);

// ---------------------------------------------------------------------------
// Phase scatter (index vs PON with phase labels)

struct ScatterPoint {
    YearMonth outage_month;
    double index_value;
    double pon;
    Phase phase;
};

struct PhaseScatter {
    std::vector<ScatterPoint> points;
    std::array<double, 3> phase_means{};
    std::array<int64_t, 3> phase_sizes{};
};

/// Pairs each season month's PON with the index `lag_months` earlier.
PhaseScatter phase_scatter(const MonthlyTimeSeries& index, const MonthlyTimeSeries& pon, const PhaseSeries& phases,
                           Season season);

// ---------------------------------------------------------------------------
// Gridded mediation maps

/// Per-cell preprocessed monthly series (empty for invalid cells).
struct CellSeriesGrid {
    GridGeometry grid;
    std::vector<MonthlyTimeSeries> cells;
    std::vector<bool> cell_valid;
};

CellSeriesGrid preprocess_cells(const ExtremeFrequencySeries& freq, YearRange climatology, int jobs = 1);

enum class PonTarget { Region, AllUs };

struct MediationSettings {
    CorrelationSettings index_vs_extreme{0, 12, CcMode::MostNegative};
    CorrelationSettings extreme_vs_pon{0, 0, CcMode::MostPositive};
    PonTarget target = PonTarget::Region;
    int jobs = 1;
};

struct MediationCell {
    int64_t cell = 0;
    double lat = 0, lon = 0;
    RegionId region = RegionId::NW;
    CorrelationResult index_vs_extreme;
    CorrelationResult extreme_vs_pon;
    bool index_significant = false;
    bool pon_significant = false;
    bool flag = false;
};

struct MediationMap {
    ExtremeKind kind = ExtremeKind::Heatwave;
    std::vector<Season> seasons;  // empty: all months
    GridGeometry grid;
    std::vector<MediationCell> cells;  // valid cells inside eligible regions, in cell order
    int64_t unassigned_cells = 0;      // valid cells outside every region
    int64_t ineligible_cells = 0;      // valid cells in excluded regions

    double flag_rate() const;
};

/// flag <=> index-vs-extreme significantly negative and extreme-vs-PON
/// significantly positive.
MediationMap mediation_maps(const IntensityProxy& proxy, const CellSeriesGrid& extremes, ExtremeKind kind,
                            const RegionalPon& pon_preprocessed, const RegionMap& map,
                            const std::vector<RegionId>& eligible, const std::vector<Season>& seasons,
                            const MediationSettings& s);

}  // namespace ensopon
