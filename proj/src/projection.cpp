#include "ensopon/projection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ensopon/error.hpp"
#include "ensopon/parallel.hpp"

namespace ensopon {

std::optional<double> AnnualSeries::at(int year) const {
    int i = year - first_year;
    if (i < 0 || i >= int(values.size()) || !valid[size_t(i)]) return std::nullopt;
    return values[size_t(i)];
}

std::optional<double> AnnualSeries::mean(int first, int last) const {
    double s = 0;
    int n = 0;
    for (int y = first; y <= last; ++y)
        if (auto v = at(y)) {
            s += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / n;
}

AnnualSeries seasonal_mean(const MonthlyTimeSeries& s, Season season) {
    AnnualSeries out;
    if (s.empty()) return out;
    const auto months = season_months(season);
    out.first_year = season_year(s.start);
    const int last = season_year(s.last());
    std::vector<double> sum(size_t(last - out.first_year + 1), 0.0);
    std::vector<int> count(sum.size(), 0);
    for (size_t t = 0; t < s.size(); ++t) {
        YearMonth ym = s.month_at(t);
        if (!s.valid[t] || !months.count(ym.month)) continue;
        size_t i = size_t(season_year(ym) - out.first_year);
        sum[i] += s.values[t];
        ++count[i];
    }
    out.values.resize(sum.size());
    out.valid.resize(sum.size());
    for (size_t i = 0; i < sum.size(); ++i) {
        out.valid[i] = count[i] > 0;
        out.values[i] = count[i] > 0 ? sum[i] / count[i] : kNaN;
    }
    return out;
}

std::string_view ratio_period_name(RatioPeriod p) {
    switch (p) {
        case RatioPeriod::HistSplit: return "hist_split";
        case RatioPeriod::MidTerm: return "mid_term";
        case RatioPeriod::LongTerm: return "long_term";
    }
    return "?";
}

YearRange ratio_period_years(RatioPeriod p) {
    switch (p) {
        case RatioPeriod::HistSplit: return {2011, 2023};
        case RatioPeriod::MidTerm: return {2041, 2060};
        case RatioPeriod::LongTerm: return {2081, 2100};
    }
    return {};
}

namespace {

double require_mean(const AnnualSeries& s, YearRange r, std::string_view what) {
    auto m = s.mean(r.first, r.last);
    if (!m)
        throw Error(ErrorCode::Coverage, std::string(what) + " has no springtime values in " +
                                             std::to_string(r.first) + "-" + std::to_string(r.last));
    return *m;
}

void finish_ratio(AmplifiedRatio& a) {
    a.delta_d = a.target_d - a.baseline_d;
    a.zero_baseline = a.baseline_pon == 0;
    a.delta_pon = a.zero_baseline ? kNaN : a.target_pon / a.baseline_pon;
}

}  // namespace

AmplifiedRatio historical_amplification(RegionId region, const MonthlyTimeSeries& freq, const MonthlyTimeSeries& pon) {
    const AnnualSeries d = seasonal_mean(freq), p = seasonal_mean(pon);
    const YearRange base{2000, 2010}, target = ratio_period_years(RatioPeriod::HistSplit);
    AmplifiedRatio a;
    a.region = region;
    a.period = RatioPeriod::HistSplit;
    const std::string code(region_code(region));
    a.baseline_d = require_mean(d, base, code + " heatwave frequency");
    a.target_d = require_mean(d, target, code + " heatwave frequency");
    a.baseline_pon = require_mean(p, base, code + " PON");
    a.target_pon = require_mean(p, target, code + " PON");
    finish_ratio(a);
    return a;
}

std::vector<AmplifiedRatio> historical_amplification(const std::map<RegionId, MonthlyTimeSeries>& freq,
                                                     const RegionalPon& pon, const std::vector<RegionId>& regions) {
    std::vector<AmplifiedRatio> out;
    for (RegionId r : regions) {
        auto f = freq.find(r);
        auto p = pon.regions.find(r);
        if (f == freq.end() || p == pon.regions.end())
            throw Error(ErrorCode::Region, "missing series for region " + std::string(region_code(r)));
        out.push_back(historical_amplification(r, f->second, p->second));
    }
    return out;
}

RegionalFit fit_regional_model(RegionId region, const MonthlyTimeSeries& freq, const MonthlyTimeSeries& pon,
                               YearRange years, double alpha) {
    const AnnualSeries d = seasonal_mean(freq), p = seasonal_mean(pon);
    std::vector<double> x, y;
    for (int yr = years.first; yr <= years.last; ++yr) {
        auto a = d.at(yr), b = p.at(yr);
        if (a && b) {
            x.push_back(*a);
            y.push_back(*b);
        }
    }
    RegionalFit fit;
    fit.region = region;
    fit.model = ols_fit(x, y);
    fit.r = fit.model.r2 > 0 ? std::copysign(std::sqrt(fit.model.r2), fit.model.slope) : 0.0;
    fit.eligible = fit.model.slope_p <= alpha;
    if (int(x.size()) != years.last - years.first + 1)
        fit.note = std::to_string(x.size()) + " of " + std::to_string(years.last - years.first + 1) +
                   " springtime samples";
    return fit;
}

std::string_view projection_mode_name(ProjectionMode m) {
    return m == ProjectionMode::PerModel ? "per_model" : "ensemble_mean_first";
}

ProjectionMode parse_projection_mode(std::string_view name) {
    if (name == "per_model") return ProjectionMode::PerModel;
    if (name == "ensemble_mean_first") return ProjectionMode::EnsembleMeanFirst;
    throw Error(ErrorCode::Config, "unknown projection mode: " + std::string(name));
}

namespace {

struct YearSpan {
    int first = 0, last = -1;
    void add(const AnnualSeries& s) {
        if (s.values.empty()) return;
        if (last < first) {
            first = s.first_year;
            last = s.last_year();
        } else {
            first = std::min(first, s.first_year);
            last = std::max(last, s.last_year());
        }
    }
};

Envelope envelope_of(const std::vector<const AnnualSeries*>& series) {
    YearSpan span;
    for (auto* s : series) span.add(*s);
    Envelope e;
    for (int y = span.first; y <= span.last; ++y) {
        double sum = 0, lo = INFINITY, hi = -INFINITY;
        int n = 0;
        for (auto* s : series)
            if (auto v = s->at(y)) {
                sum += *v;
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
                ++n;
            }
        if (n == 0) continue;
        e.years.push_back(y);
        e.mean.push_back(sum / n);
        e.min.push_back(lo);
        e.max.push_back(hi);
        e.members.push_back(n);
    }
    return e;
}

double clip_prediction(double v, int64_t& clipped) {
    if (v < 0) {
        ++clipped;
        return 0.0;
    }
    return v;
}

}  // namespace

ProjectionEnsemble project_ensemble(const std::vector<ModelSeries>& models, const std::map<RegionId, RegionalFit>& fits,
                                    ProjectionMode mode, const std::vector<Scenario>& required, int jobs) {
    if (models.empty()) throw Error(ErrorCode::Empty, "projection needs at least one model");
    for (Scenario s : required)
        if (std::none_of(models.begin(), models.end(), [s](const ModelSeries& m) { return m.scenario == s; }))
            throw Error(ErrorCode::Empty, "no model provided for scenario " + std::string(scenario_name(s)));

    ProjectionEnsemble ens;
    ens.mode = mode;
    ens.fits = fits;
    std::vector<RegionId> eligible;
    for (const auto& [r, f] : fits)
        if (f.eligible) eligible.push_back(r);

    std::vector<const ModelSeries*> order;
    for (const auto& m : models) order.push_back(&m);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) {
        return std::pair{a->scenario, a->model} < std::pair{b->scenario, b->model};
    });

    ens.members.resize(order.size());
    parallel_for(int64_t(order.size()), jobs, [&](int64_t i) {
        const ModelSeries& m = *order[size_t(i)];
        MemberProjection& mp = ens.members[size_t(i)];
        mp.model = m.model;
        mp.scenario = m.scenario;
        for (const auto& [r, s] : m.heatwave_frequency) mp.frequency[r] = seasonal_mean(s);
        std::vector<const AnnualSeries*> elig;
        for (RegionId r : eligible) {
            auto it = mp.frequency.find(r);
            if (it == mp.frequency.end())
                throw Error(ErrorCode::Region, "model " + m.model + " lacks eligible region " +
                                                   std::string(region_code(r)));
            elig.push_back(&it->second);
            const LinearModel& lm = fits.at(r).model;
            AnnualSeries est = it->second;
            for (size_t k = 0; k < est.values.size(); ++k)
                if (est.valid[k]) est.values[k] = clip_prediction(lm.predict(est.values[k]), mp.clipped);
            mp.pon[r] = std::move(est);
        }
        if (!elig.empty()) {
            Envelope e = envelope_of(elig);
            AnnualSeries& out = mp.eligible_mean_frequency;
            if (!e.years.empty()) {
                out.first_year = e.years.front();
                out.values.assign(size_t(e.years.back() - e.years.front() + 1), kNaN);
                out.valid.assign(out.values.size(), false);
                for (size_t k = 0; k < e.years.size(); ++k) {
                    size_t j = size_t(e.years[k] - out.first_year);
                    out.values[j] = e.mean[k];
                    out.valid[j] = true;
                }
            }
        }
    });

    std::set<Scenario> scenarios;
    for (const auto& mp : ens.members) {
        scenarios.insert(mp.scenario);
        ens.clipped += mp.clipped;
        if (mp.clipped > 0)
            ens.log.push_back(mp.model + " " + std::string(scenario_name(mp.scenario)) + ": " +
                              std::to_string(mp.clipped) + " negative PON predictions clipped to 0");
    }

    for (Scenario sc : scenarios) {
        std::vector<const MemberProjection*> mem;
        for (const auto& mp : ens.members)
            if (mp.scenario == sc) mem.push_back(&mp);

        std::set<RegionId> regions;
        for (auto* mp : mem)
            for (const auto& [r, _] : mp->frequency) regions.insert(r);
        for (RegionId r : regions) {
            std::vector<const AnnualSeries*> v;
            for (auto* mp : mem)
                if (auto it = mp->frequency.find(r); it != mp->frequency.end()) v.push_back(&it->second);
            ens.frequency[sc][r] = envelope_of(v);
        }
        for (RegionId r : eligible) {
            std::vector<const AnnualSeries*> v;
            for (auto* mp : mem) v.push_back(&mp->pon.at(r));
            Envelope e = envelope_of(v);
            if (mode == ProjectionMode::EnsembleMeanFirst) {
                const Envelope& f = ens.frequency[sc][r];
                const LinearModel& lm = fits.at(r).model;
                int64_t clipped = 0;
                for (size_t k = 0; k < e.years.size(); ++k) {
                    auto it = std::find(f.years.begin(), f.years.end(), e.years[k]);
                    e.mean[k] = clip_prediction(lm.predict(f.mean[size_t(it - f.years.begin())]), clipped);
                }
                ens.clipped += clipped;
                if (clipped > 0)
                    ens.log.push_back(std::string(scenario_name(sc)) + " " + std::string(region_code(r)) + ": " +
                                      std::to_string(clipped) + " negative ensemble-mean predictions clipped to 0");
            }
            ens.pon[sc][r] = std::move(e);
        }
        if (!eligible.empty()) {
            std::vector<const AnnualSeries*> v;
            for (auto* mp : mem) v.push_back(&mp->eligible_mean_frequency);
            ens.eligible_frequency[sc] = envelope_of(v);
        }
    }
    return ens;
}

std::vector<AmplifiedRatio> future_amplified_ratios(const ProjectionEnsemble& ens,
                                                    const std::vector<RatioPeriod>& periods,
                                                    const std::map<RegionId, MonthlyTimeSeries>& observed_freq,
                                                    const RegionalPon& observed_pon, YearRange baseline) {
    std::vector<AmplifiedRatio> out;
    auto period_mean = [](const Envelope& e, YearRange r, const std::string& what) {
        double s = 0;
        int n = 0;
        for (size_t k = 0; k < e.years.size(); ++k)
            if (r.contains(e.years[k])) {
                s += e.mean[k];
                ++n;
            }
        if (n != r.last - r.first + 1)
            throw Error(ErrorCode::Coverage, what + " covers " + std::to_string(n) + " of the years " +
                                                 std::to_string(r.first) + "-" + std::to_string(r.last));
        return s / n;
    };
    for (const auto& [sc, regions] : ens.pon) {
        for (const auto& [r, pon_env] : regions) {
            const std::string code(region_code(r));
            auto f = observed_freq.find(r);
            auto p = observed_pon.regions.find(r);
            if (f == observed_freq.end() || p == observed_pon.regions.end())
                throw Error(ErrorCode::Region, "missing observed series for region " + code);
            const double base_d = require_mean(seasonal_mean(f->second), baseline, code + " heatwave frequency");
            const double base_p = require_mean(seasonal_mean(p->second), baseline, code + " PON");
            for (RatioPeriod per : periods) {
                const YearRange yr = ratio_period_years(per);
                const std::string what = std::string(scenario_name(sc)) + " " + code;
                AmplifiedRatio a;
                a.region = r;
                a.period = per;
                a.scenario = sc;
                a.baseline_d = base_d;
                a.baseline_pon = base_p;
                a.target_d = period_mean(ens.frequency.at(sc).at(r), yr, what + " frequency");
                a.target_pon = period_mean(pon_env, yr, what + " PON");
                finish_ratio(a);
                out.push_back(a);
            }
        }
    }
    return out;
}

}  // namespace ensopon
