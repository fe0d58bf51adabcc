#pragma once

#include <functional>
#include <initializer_list>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ensopon/series.hpp"

namespace ensopon {

/// OLS line fitted against the 1-based month index t.
struct LinearTrend {
    double intercept = 0;
    double slope = 0;  // per month
    double residual_variance = 0;
};

/// x̂(t) = x(t) - (a + b t). Requires a raw, fully valid series with T >= 3.
std::pair<LinearTrend, MonthlyTimeSeries> detrend(const MonthlyTimeSeries& x);

/// Inclusive range of calendar years used as climatology.
struct YearRange {
    int first = 2000;
    int last = 2023;
    bool contains(int y) const { return first <= y && y <= last; }
};

/// Subtracts, for each calendar month, its mean over the climatology years.
/// Requires a detrended series whose span overlaps the climatology.
MonthlyTimeSeries anomaly(const MonthlyTimeSeries& detrended, YearRange climatology = {});

/// Centered 3-month mean. The first and last months are left invalid, as is
/// any month with an invalid neighbour.
MonthlyTimeSeries running_mean3(const MonthlyTimeSeries& anomalies);

/// detrend -> anomaly -> running_mean3.
MonthlyTimeSeries preprocess(const MonthlyTimeSeries& raw, YearRange climatology = {});

/// Predicate over (value, month 1..12, year).
struct SubsetCondition {
    std::function<bool(double, int, int)> predicate;
    std::string description;

    bool operator()(double value, int month, int year) const { return predicate(value, month, year); }

    static SubsetCondition always();
    static SubsetCondition in_months(std::set<int> months);
    static SubsetCondition below(double threshold);
    static SubsetCondition above(double threshold);
    SubsetCondition operator&&(const SubsetCondition& other) const;
};

struct Sample {
    size_t t;
    YearMonth month;
    double value;
};

/// Valid samples satisfying the condition. Unless `any_stage` is set the
/// series must be smoothed.
std::vector<Sample> select_subset(const MonthlyTimeSeries& smoothed, const SubsetCondition& cond,
                                  bool any_stage = false);

}  // namespace ensopon
