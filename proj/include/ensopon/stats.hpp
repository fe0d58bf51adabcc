#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ensopon {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// How the lagged cross-correlation is normalized.
///  FullSeries: numerator over the overlapping pairs, denominator from the
///              centred sums of squares of each whole series.
///  Overlap:    Pearson correlation of the overlapping pairs only.
enum class CcNormalization { FullSeries, Overlap };

enum class CcMode { MaxAbs, MostNegative, MostPositive };

std::string_view cc_mode_name(CcMode m);
CcMode parse_cc_mode(std::string_view name);
std::string_view cc_normalization_name(CcNormalization n);
CcNormalization parse_cc_normalization(std::string_view name);

struct CorrelationResult {
    double r = kNaN;
    int lag = 0;
    int64_t n_samples = 0;
    double p_value = kNaN;
    bool computable = false;  // false when too few pairs or zero variance
    bool degenerate = false;  // |r| == 1
};

/// Time-delayed cross-correlation at lag k; positive k means x leads y
/// (x(t) is paired with y(t + k)). Negative k swaps the roles. Throws
/// E_DEGENERATE for a constant series and E_DOMAIN for |k| > T - 3.
double lagged_cc(std::span<const double> x, std::span<const double> y, int k,
                 CcNormalization norm = CcNormalization::FullSeries);

/// Same as lagged_cc but only pairs where both entries are valid contribute;
/// means and sums of squares for FullSeries use each series' valid entries.
/// Returns a non-computable result instead of throwing.
CorrelationResult masked_lagged_cc(std::span<const double> x, const std::vector<bool>& x_valid,
                                   std::span<const double> y, const std::vector<bool>& y_valid, int k,
                                   CcNormalization norm, int64_t min_samples = 3);

struct Significance {
    double p_value = 1.0;
    bool degenerate = false;
};

/// Two-sided p from t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
/// Requires n >= 4. |r| == 1 gives p = 0 with the degenerate flag set.
Significance cc_significance(double r, int64_t n);

double pearson(std::span<const double> x, std::span<const double> y);

struct PermutationOptions {
    int permutations = 2000;
    int block_length = 12;
    uint64_t seed = 0;
};

/// Circular block permutation of 0..n-1: rotate by a random offset, cut into
/// blocks of `block_length`, shuffle the blocks.
std::vector<int64_t> circular_block_permutation(int64_t n, int block_length, std::mt19937_64& rng);

/// Two-sided permutation p-value for the Pearson correlation of (x, y) under
/// circular block permutations of y: (1 + #{|r*| >= |r|}) / (B + 1).
double permutation_p(std::span<const double> x, std::span<const double> y, const PermutationOptions& opt);

/// Index of the extremal result according to mode among computable entries,
/// ties broken toward smaller |lag| and then positive lag; -1 if none.
int pick_extremum(const std::vector<CorrelationResult>& candidates, CcMode mode);

/// Scans all integer lags in [k_min, k_max] with lagged_cc and returns the
/// extremum per mode with its t-test p-value (n = overlapping pairs).
CorrelationResult max_cc(std::span<const double> x, std::span<const double> y, int k_min, int k_max, CcMode mode,
                         CcNormalization norm = CcNormalization::FullSeries);

enum class SignificanceMethod { TTest, Permutation };

std::string_view significance_method_name(SignificanceMethod m);
SignificanceMethod parse_significance_method(std::string_view name);

/// Source index for each position of a permuted y series (-1 = missing).
using Permuter = std::function<std::vector<int64_t>(std::mt19937_64&)>;

struct LagScanOptions {
    int k_min = 0;
    int k_max = 12;
    CcMode mode = CcMode::MostNegative;
    CcNormalization norm = CcNormalization::Overlap;
    int64_t min_samples = 8;
    SignificanceMethod method = SignificanceMethod::TTest;
    int permutations = 999;
    uint64_t seed = 0;
    Permuter permuter;  // defaults to a circular block permutation of y
    int block_length = 12;
};

struct LagScanResult {
    std::vector<CorrelationResult> curve;  // one per lag, k_min..k_max
    CorrelationResult best;
};

/// Masked lag scan. With the permutation method, each curve entry gets a
/// pointwise two-sided permutation p and `best` gets a p-value against the
/// permutation distribution of the extremum over the whole lag range.
LagScanResult lag_scan(std::span<const double> x, const std::vector<bool>& x_valid, std::span<const double> y,
                       const std::vector<bool>& y_valid, const LagScanOptions& opt);

// ---------------------------------------------------------------------------

struct AnovaResult {
    std::vector<double> group_means;
    std::vector<int64_t> group_sizes;
    std::vector<double> group_effects;  // group mean - grand mean
    double grand_mean = 0;
    double ss_between = 0, ss_within = 0;
    int64_t df_between = 0, df_within = 0;
    double ms_between = 0, mse_within = 0;
    double f = 0;
    double p = 1;
};

/// One-way ANOVA. Needs >= 2 groups of >= 2 samples each; throws
/// E_DEGENERATE when every group has zero within-group variance.
AnovaResult anova(const std::vector<std::vector<double>>& groups);

struct HsdPair {
    int i = 0, j = 0;
    double mean_difference = 0;  // mean_i - mean_j
    double critical_value = 0;
    double q_statistic = 0;
    double p_adjusted = 1;
    bool significant = false;
};

struct HsdResult {
    double alpha = 0.05;
    double q_critical = 0;
    AnovaResult anova;
    std::vector<HsdPair> pairs;  // (0,1), (0,2), ..., (1,2), ...
};

/// Tukey-Kramer: critical = q(alpha; k, df_within) * sqrt(MSE/2 (1/n_i + 1/n_j)).
HsdResult tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

struct LinearModel {
    double intercept = 0;
    double slope = 0;
    double residual_se = 0;
    double r2 = 0;
    double slope_se = 0;
    double slope_p = 1;
    int64_t n = 0;
    double x_mean = 0, y_mean = 0;

    double predict(double x) const { return intercept + slope * x; }
};

/// Ordinary least squares y = a + b x with a two-sided t-test on b.
LinearModel ols_fit(std::span<const double> x, std::span<const double> y);

}  // namespace ensopon
