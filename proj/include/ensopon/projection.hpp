#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/analysis.hpp"
#include "ensopon/ingest.hpp"
#include "ensopon/stats.hpp"

namespace ensopon {

/// One value per season-year.
struct AnnualSeries {
    int first_year = 2000;
    std::vector<double> values;
    std::vector<bool> valid;

    int last_year() const { return first_year + int(values.size()) - 1; }
    std::optional<double> at(int year) const;
    /// Mean of valid values over [first, last]; nullopt when none.
    std::optional<double> mean(int first, int last) const;
};

/// Per season-year mean of the valid months in the season (MAM by default).
AnnualSeries seasonal_mean(const MonthlyTimeSeries& s, Season season = Season::MAM);

enum class RatioPeriod { HistSplit, MidTerm, LongTerm };

std::string_view ratio_period_name(RatioPeriod p);  // "hist_split", "mid_term", "long_term"
YearRange ratio_period_years(RatioPeriod p);        // 2011-2023, 2041-2060, 2081-2100

struct AmplifiedRatio {
    RegionId region = RegionId::NW;
    RatioPeriod period = RatioPeriod::HistSplit;
    std::optional<Scenario> scenario;
    double baseline_d = 0, target_d = 0;
    double baseline_pon = 0, target_pon = 0;
    double delta_d = 0;            // target - baseline, days
    double delta_pon = kNaN;       // target / baseline, NaN when the baseline is zero
    bool zero_baseline = false;
};

/// Springtime means of 2011-2023 against 2000-2010.
AmplifiedRatio historical_amplification(RegionId region, const MonthlyTimeSeries& freq, const MonthlyTimeSeries& pon);
std::vector<AmplifiedRatio> historical_amplification(const std::map<RegionId, MonthlyTimeSeries>& freq,
                                                     const RegionalPon& pon, const std::vector<RegionId>& regions);

struct RegionalFit {
    RegionId region = RegionId::NW;
    LinearModel model;
    double r = kNaN;
    bool eligible = false;
    std::string note;
};

/// OLS of springtime PON on springtime heatwave frequency over `years`;
/// eligible when the slope (equivalently the correlation) has p <= alpha.
/// Throws E_DEGENERATE for a constant predictor.
RegionalFit fit_regional_model(RegionId region, const MonthlyTimeSeries& freq, const MonthlyTimeSeries& pon,
                               YearRange years = {}, double alpha = 0.05);

enum class ProjectionMode { PerModel, EnsembleMeanFirst };

std::string_view projection_mode_name(ProjectionMode m);
ProjectionMode parse_projection_mode(std::string_view name);

struct Envelope {
    std::vector<int> years;
    std::vector<double> mean, min, max;
    std::vector<int> members;
};

struct MemberProjection {
    std::string model;
    Scenario scenario = Scenario::SSP2_45;
    std::map<RegionId, AnnualSeries> frequency;  // springtime D_heat
    std::map<RegionId, AnnualSeries> pon;        // estimated PON, eligible regions only
    AnnualSeries eligible_mean_frequency;        // mean over eligible regions
    int64_t clipped = 0;
};

struct ProjectionEnsemble {
    ProjectionMode mode = ProjectionMode::PerModel;
    std::map<RegionId, RegionalFit> fits;
    std::vector<MemberProjection> members;  // ordered by (scenario, model)
    std::map<Scenario, std::map<RegionId, Envelope>> frequency;
    std::map<Scenario, std::map<RegionId, Envelope>> pon;
    std::map<Scenario, Envelope> eligible_frequency;
    int64_t clipped = 0;
    std::vector<std::string> log;
};

/// Per-model springtime frequencies pushed through each eligible region's
/// fit (negative predictions clipped to 0), then equal-weight envelopes per
/// scenario and year. Throws E_EMPTY when a required scenario has no model.
ProjectionEnsemble project_ensemble(const std::vector<ModelSeries>& models, const std::map<RegionId, RegionalFit>& fits,
                                    ProjectionMode mode = ProjectionMode::PerModel,
                                    const std::vector<Scenario>& required = {}, int jobs = 1);

/// Ensemble-mean projection over each period against the observed 2000-2023
/// springtime means. Throws E_COVERAGE when a period is not covered.
std::vector<AmplifiedRatio> future_amplified_ratios(const ProjectionEnsemble& ens,
                                                    const std::vector<RatioPeriod>& periods,
                                                    const std::map<RegionId, MonthlyTimeSeries>& observed_freq,
                                                    const RegionalPon& observed_pon, YearRange baseline = {});

}  // namespace ensopon
