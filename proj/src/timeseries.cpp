#include "ensopon/timeseries.hpp"

#include <array>
#include <cmath>

#include "ensopon/error.hpp"

namespace ensopon {

namespace {

void require_stage(const MonthlyTimeSeries& x, Stage expected, const char* op) {
    if (x.stage != expected)
        throw Error(ErrorCode::Stage, std::string(op) + " expects a " + std::string(stage_name(expected)) +
                                          " series, got " + std::string(stage_name(x.stage)));
}

}  // namespace

std::pair<LinearTrend, MonthlyTimeSeries> detrend(const MonthlyTimeSeries& x) {
    require_stage(x, Stage::Raw, "detrend");
    const size_t n = x.size();
    if (n < 3) throw Error(ErrorCode::Domain, "detrend needs at least 3 months, got " + std::to_string(n));
    if (!x.all_valid()) throw Error(ErrorCode::Gap, "detrend input has missing months");

    // t = 1..n, so the mean of t is (n+1)/2 and Σ(t-t̄)² = n(n²-1)/12 exactly.
    const double tbar = (double(n) + 1.0) / 2.0;
    const double stt = double(n) * (double(n) * double(n) - 1.0) / 12.0;
    double xbar = 0;
    for (double v : x.values) xbar += v;
    xbar /= double(n);
    double stx = 0;
    for (size_t i = 0; i < n; ++i) stx += (double(i + 1) - tbar) * (x.values[i] - xbar);

    LinearTrend trend;
    trend.slope = stx / stt;
    trend.intercept = xbar - trend.slope * tbar;

    MonthlyTimeSeries out = x;
    out.stage = Stage::Detrended;
    double sse = 0;
    for (size_t i = 0; i < n; ++i) {
        // centered form keeps the residual exact for exact lines
        double r = (x.values[i] - xbar) - trend.slope * (double(i + 1) - tbar);
        out.values[i] = r;
        sse += r * r;
    }
    trend.residual_variance = sse / double(n - 2);
    return {trend, std::move(out)};
}

MonthlyTimeSeries anomaly(const MonthlyTimeSeries& x, YearRange clim) {
    require_stage(x, Stage::Detrended, "anomaly");
    if (x.empty()) throw Error(ErrorCode::Domain, "anomaly of an empty series");
    if (clim.first > clim.last) throw Error(ErrorCode::Domain, "climatology range is reversed");
    const int y0 = x.start.year, y1 = x.last().year;
    if (clim.first < y0 || clim.last > y1)
        throw Error(ErrorCode::Coverage, "climatology " + std::to_string(clim.first) + "-" + std::to_string(clim.last) +
                                             " lies outside series years " + std::to_string(y0) + "-" +
                                             std::to_string(y1));

    std::array<double, 12> sum{};
    std::array<int, 12> count{};
    for (size_t t = 0; t < x.size(); ++t) {
        if (!x.valid[t]) continue;
        YearMonth ym = x.month_at(t);
        if (!clim.contains(ym.year)) continue;
        sum[ym.month - 1] += x.values[t];
        ++count[ym.month - 1];
    }
    std::array<double, 12> mean{};
    for (int m = 0; m < 12; ++m) mean[m] = count[m] ? sum[m] / count[m] : std::nan("");

    MonthlyTimeSeries out = x;
    out.stage = Stage::Anomaly;
    for (size_t t = 0; t < x.size(); ++t) {
        if (!x.valid[t]) continue;
        int m = x.month_at(t).month - 1;
        if (!count[m])
            throw Error(ErrorCode::Coverage, "calendar month " + std::to_string(m + 1) + " has no climatology samples");
        out.values[t] = x.values[t] - mean[m];
    }
    return out;
}

MonthlyTimeSeries running_mean3(const MonthlyTimeSeries& x) {
    require_stage(x, Stage::Anomaly, "running_mean3");
    const size_t n = x.size();
    if (n < 3) throw Error(ErrorCode::Domain, "running_mean3 needs at least 3 months");
    MonthlyTimeSeries out = x;
    out.stage = Stage::Smoothed;
    for (size_t t = 0; t < n; ++t) {
        bool ok = t > 0 && t + 1 < n && x.valid[t - 1] && x.valid[t] && x.valid[t + 1];
        out.valid[t] = ok;
        out.values[t] = ok ? (x.values[t - 1] + x.values[t] + x.values[t + 1]) / 3.0 : std::nan("");
    }
    return out;
}

MonthlyTimeSeries preprocess(const MonthlyTimeSeries& raw, YearRange clim) {
    return running_mean3(anomaly(detrend(raw).second, clim));
}

SubsetCondition SubsetCondition::always() {
    return {[](double, int, int) { return true; }, "all"};
}

SubsetCondition SubsetCondition::in_months(std::set<int> months) {
    std::string desc = "month in {";
    bool first = true;
    for (int m : months) {
        desc += (first ? "" : ",") + std::to_string(m);
        first = false;
    }
    desc += "}";
    return {[months = std::move(months)](double, int m, int) { return months.count(m) > 0; }, desc};
}

SubsetCondition SubsetCondition::below(double threshold) {
    return {[threshold](double v, int, int) { return v < threshold; }, "value < " + std::to_string(threshold)};
}

SubsetCondition SubsetCondition::above(double threshold) {
    return {[threshold](double v, int, int) { return v > threshold; }, "value > " + std::to_string(threshold)};
}

SubsetCondition SubsetCondition::operator&&(const SubsetCondition& other) const {
    return {[a = predicate, b = other.predicate](double v, int m, int y) { return a(v, m, y) && b(v, m, y); },
            description + " and " + other.description};
}

std::vector<Sample> select_subset(const MonthlyTimeSeries& x, const SubsetCondition& cond, bool any_stage) {
    if (!any_stage) require_stage(x, Stage::Smoothed, "select_subset");
    std::vector<Sample> out;
    for (size_t t = 0; t < x.size(); ++t) {
        if (!x.valid[t]) continue;
        YearMonth ym = x.month_at(t);
        if (cond(x.values[t], ym.month, ym.year)) out.push_back({t, ym, x.values[t]});
    }
    return out;
}

}  // namespace ensopon
