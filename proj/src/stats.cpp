#include "ensopon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ensopon/csv.hpp"
#include "ensopon/distributions.hpp"
#include "ensopon/error.hpp"

namespace ensopon {

std::string_view cc_mode_name(CcMode m) {
    switch (m) {
        case CcMode::MaxAbs: return "max_abs";
        case CcMode::MostNegative: return "most_negative";
        case CcMode::MostPositive: return "most_positive";
    }
    return "?";
}

CcMode parse_cc_mode(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "maxabs") return CcMode::MaxAbs;
    if (key == "mostnegative") return CcMode::MostNegative;
    if (key == "mostpositive") return CcMode::MostPositive;
    throw Error(ErrorCode::Config, "unknown CC mode '" + std::string(name) + "'");
}

std::string_view cc_normalization_name(CcNormalization n) {
    return n == CcNormalization::FullSeries ? "full_series" : "overlap";
}

CcNormalization parse_cc_normalization(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "fullseries" || key == "printed") return CcNormalization::FullSeries;
    if (key == "overlap" || key == "pearson") return CcNormalization::Overlap;
    throw Error(ErrorCode::Config, "unknown CC normalization '" + std::string(name) + "'");
}

std::string_view significance_method_name(SignificanceMethod m) {
    return m == SignificanceMethod::TTest ? "t_test" : "permutation";
}

SignificanceMethod parse_significance_method(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "ttest" || key == "t") return SignificanceMethod::TTest;
    if (key == "permutation" || key == "perm") return SignificanceMethod::Permutation;
    throw Error(ErrorCode::Config, "unknown significance method '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// correlation

CorrelationResult masked_lagged_cc(std::span<const double> x, const std::vector<bool>& xv, std::span<const double> y,
                                   const std::vector<bool>& yv, int k, CcNormalization norm, int64_t min_samples) {
    if (x.size() != y.size() || xv.size() != x.size() || yv.size() != y.size())
        throw Error(ErrorCode::Size, "lagged correlation needs equal-length series and masks");
    const int64_t T = int64_t(x.size());
    CorrelationResult res;
    res.lag = k;
    const int64_t t_lo = std::max<int64_t>(0, -k), t_hi = std::min<int64_t>(T, T - k);

    double num = 0, ssx = 0, ssy = 0;
    int64_t n = 0;
    if (norm == CcNormalization::Overlap) {
        double sx = 0, sy = 0;
        for (int64_t t = t_lo; t < t_hi; ++t)
            if (xv[size_t(t)] && yv[size_t(t + k)]) {
                sx += x[size_t(t)];
                sy += y[size_t(t + k)];
                ++n;
            }
        if (n == 0) return res;
        const double mx = sx / double(n), my = sy / double(n);
        for (int64_t t = t_lo; t < t_hi; ++t)
            if (xv[size_t(t)] && yv[size_t(t + k)]) {
                double a = x[size_t(t)] - mx, b = y[size_t(t + k)] - my;
                num += a * b;
                ssx += a * a;
                ssy += b * b;
            }
    } else {
        double sx = 0, sy = 0;
        int64_t nx = 0, ny = 0;
        for (int64_t t = 0; t < T; ++t) {
            if (xv[size_t(t)]) { sx += x[size_t(t)]; ++nx; }
            if (yv[size_t(t)]) { sy += y[size_t(t)]; ++ny; }
        }
        if (nx == 0 || ny == 0) return res;
        const double mx = sx / double(nx), my = sy / double(ny);
        for (int64_t t = 0; t < T; ++t) {
            if (xv[size_t(t)]) ssx += (x[size_t(t)] - mx) * (x[size_t(t)] - mx);
            if (yv[size_t(t)]) ssy += (y[size_t(t)] - my) * (y[size_t(t)] - my);
        }
        for (int64_t t = t_lo; t < t_hi; ++t)
            if (xv[size_t(t)] && yv[size_t(t + k)]) {
                num += (x[size_t(t)] - mx) * (y[size_t(t + k)] - my);
                ++n;
            }
    }
    res.n_samples = n;
    if (n < std::max<int64_t>(min_samples, 3) || ssx <= 0 || ssy <= 0) return res;
    res.r = std::clamp(num / std::sqrt(ssx * ssy), -1.0, 1.0);
    res.computable = true;
    if (n >= 4) {
        auto sig = cc_significance(res.r, n);
        res.p_value = sig.p_value;
        res.degenerate = sig.degenerate;
    }
    return res;
}

double lagged_cc(std::span<const double> x, std::span<const double> y, int k, CcNormalization norm) {
    if (x.size() != y.size()) throw Error(ErrorCode::Size, "lagged_cc needs equal-length series");
    const int64_t T = int64_t(x.size());
    if (T < 3 || std::abs(int64_t(k)) > T - 3)
        throw Error(ErrorCode::Domain, "lag " + std::to_string(k) + " outside [-(T-3), T-3] for T=" + std::to_string(T));
    auto constant = [](std::span<const double> s) {
        return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
    };
    if (constant(x) || constant(y)) throw Error(ErrorCode::Degenerate, "correlation undefined for a constant series");
    std::vector<bool> all(x.size(), true);
    auto res = masked_lagged_cc(x, all, y, all, k, norm, 1);
    if (!res.computable) throw Error(ErrorCode::Degenerate, "correlation undefined (zero variance in the overlap)");
    return res.r;
}

Significance cc_significance(double r, int64_t n) {
    if (n < 4) throw Error(ErrorCode::Domain, "significance needs at least 4 samples");
    if (std::isnan(r)) throw Error(ErrorCode::Domain, "significance of an undefined correlation");
    if (std::abs(r) >= 1.0) return {0.0, true};
    const double df = double(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return {dist::student_t_two_sided(t, df), false};
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::Size, "pearson needs two equal-length samples");
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) throw Error(ErrorCode::Degenerate, "pearson of a constant sample");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<int64_t> circular_block_permutation(int64_t n, int block_length, std::mt19937_64& rng) {
    if (n <= 0) return {};
    const int64_t L = std::max(1, block_length);
    std::uniform_int_distribution<int64_t> shift_dist(0, n - 1);
    const int64_t shift = shift_dist(rng);
    std::vector<std::pair<int64_t, int64_t>> blocks;  // [begin, end) in rotated order
    for (int64_t b = 0; b < n; b += L) blocks.emplace_back(b, std::min(n, b + L));
    std::shuffle(blocks.begin(), blocks.end(), rng);
    std::vector<int64_t> out;
    out.reserve(size_t(n));
    for (auto [b, e] : blocks)
        for (int64_t i = b; i < e; ++i) out.push_back((i + shift) % n);
    return out;
}

double permutation_p(std::span<const double> x, std::span<const double> y, const PermutationOptions& opt) {
    const double r = pearson(x, y);
    std::mt19937_64 rng(opt.seed);
    std::vector<double> yp(y.size());
    int64_t hits = 0;
    for (int b = 0; b < opt.permutations; ++b) {
        auto idx = circular_block_permutation(int64_t(y.size()), opt.block_length, rng);
        for (size_t i = 0; i < y.size(); ++i) yp[i] = y[size_t(idx[i])];
        double rp = pearson(x, yp);
        if (std::abs(rp) >= std::abs(r) - 1e-12) ++hits;
    }
    return double(1 + hits) / double(opt.permutations + 1);
}

int pick_extremum(const std::vector<CorrelationResult>& c, CcMode mode) {
    auto score = [mode](const CorrelationResult& r) {
        switch (mode) {
            case CcMode::MaxAbs: return std::abs(r.r);
            case CcMode::MostNegative: return -r.r;
            case CcMode::MostPositive: return r.r;
        }
        return 0.0;
    };
    int best = -1;
    for (int i = 0; i < int(c.size()); ++i) {
        if (!c[size_t(i)].computable) continue;
        if (best < 0) {
            best = i;
            continue;
        }
        const double s = score(c[size_t(i)]), sb = score(c[size_t(best)]);
        if (s > sb + 1e-14) {
            best = i;
        } else if (std::abs(s - sb) <= 1e-14) {
            int li = c[size_t(i)].lag, lb = c[size_t(best)].lag;
            if (std::abs(li) < std::abs(lb) || (std::abs(li) == std::abs(lb) && li > lb)) best = i;
        }
    }
    return best;
}

CorrelationResult max_cc(std::span<const double> x, std::span<const double> y, int k_min, int k_max, CcMode mode,
                         CcNormalization norm) {
    if (k_min > k_max) throw Error(ErrorCode::Domain, "empty lag range");
    std::vector<CorrelationResult> curve;
    for (int k = k_min; k <= k_max; ++k) {
        CorrelationResult r;
        r.lag = k;
        r.r = lagged_cc(x, y, k, norm);
        r.n_samples = int64_t(x.size()) - std::abs(k);
        r.computable = true;
        if (r.n_samples >= 4) {
            auto sig = cc_significance(r.r, r.n_samples);
            r.p_value = sig.p_value;
            r.degenerate = sig.degenerate;
        }
        curve.push_back(r);
    }
    return curve[size_t(pick_extremum(curve, mode))];
}

LagScanResult lag_scan(std::span<const double> x, const std::vector<bool>& xv, std::span<const double> y,
                       const std::vector<bool>& yv, const LagScanOptions& opt) {
    if (opt.k_min > opt.k_max) throw Error(ErrorCode::Domain, "empty lag range");
    LagScanResult out;
    auto scan = [&](std::span<const double> ys, const std::vector<bool>& yvs) {
        std::vector<CorrelationResult> curve;
        curve.reserve(size_t(opt.k_max - opt.k_min + 1));
        for (int k = opt.k_min; k <= opt.k_max; ++k)
            curve.push_back(masked_lagged_cc(x, xv, ys, yvs, k, opt.norm, opt.min_samples));
        return curve;
    };
    out.curve = scan(y, yv);
    int best = pick_extremum(out.curve, opt.mode);
    if (best < 0) {
        out.best.computable = false;
        out.best.lag = opt.k_min;
        return out;
    }
    out.best = out.curve[size_t(best)];
    if (opt.method == SignificanceMethod::TTest) return out;

    auto stat = [&](const CorrelationResult& r) {
        switch (opt.mode) {
            case CcMode::MaxAbs: return std::abs(r.r);
            case CcMode::MostNegative: return -r.r;
            case CcMode::MostPositive: return r.r;
        }
        return 0.0;
    };
    const double observed = stat(out.best);
    std::mt19937_64 rng(opt.seed);
    std::vector<double> yp(y.size());
    std::vector<bool> yvp(y.size());
    std::vector<int64_t> pointwise(out.curve.size(), 0);
    int64_t extreme_hits = 0;
    for (int b = 0; b < opt.permutations; ++b) {
        auto idx = opt.permuter ? opt.permuter(rng) : circular_block_permutation(int64_t(y.size()), opt.block_length, rng);
        if (idx.size() != y.size()) throw Error(ErrorCode::Size, "permuter returned the wrong length");
        for (size_t i = 0; i < y.size(); ++i) {
            bool ok = idx[i] >= 0 && yv[size_t(idx[i])];
            yvp[i] = ok;
            yp[i] = ok ? y[size_t(idx[i])] : 0.0;
        }
        auto curve = scan(yp, yvp);
        double best_perm = -INFINITY;
        for (size_t i = 0; i < curve.size(); ++i) {
            if (!curve[i].computable) continue;
            best_perm = std::max(best_perm, stat(curve[i]));
            if (out.curve[i].computable && std::abs(curve[i].r) >= std::abs(out.curve[i].r) - 1e-12) ++pointwise[i];
        }
        if (best_perm >= observed - 1e-12) ++extreme_hits;
    }
    const double denom = double(opt.permutations + 1);
    for (size_t i = 0; i < out.curve.size(); ++i)
        if (out.curve[i].computable) out.curve[i].p_value = double(1 + pointwise[i]) / denom;
    out.best.p_value = double(1 + extreme_hits) / denom;
    return out;
}

// ---------------------------------------------------------------------------
// ANOVA / HSD / OLS

AnovaResult anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw Error(ErrorCode::Domain, "ANOVA needs at least two groups");
    AnovaResult a;
    double total = 0;
    int64_t n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw Error(ErrorCode::Domain, "every ANOVA group needs at least two samples");
        double s = std::accumulate(g.begin(), g.end(), 0.0);
        a.group_means.push_back(s / double(g.size()));
        a.group_sizes.push_back(int64_t(g.size()));
        total += s;
        n += int64_t(g.size());
    }
    a.grand_mean = total / double(n);
    for (size_t i = 0; i < groups.size(); ++i) {
        double d = a.group_means[i] - a.grand_mean;
        a.group_effects.push_back(d);
        a.ss_between += double(a.group_sizes[i]) * d * d;
        for (double v : groups[i]) a.ss_within += (v - a.group_means[i]) * (v - a.group_means[i]);
    }
    a.df_between = int64_t(groups.size()) - 1;
    a.df_within = n - int64_t(groups.size());
    if (a.ss_within <= 0) throw Error(ErrorCode::Degenerate, "ANOVA undefined: zero variance within every group");
    a.ms_between = a.ss_between / double(a.df_between);
    a.mse_within = a.ss_within / double(a.df_within);
    a.f = a.ms_between / a.mse_within;
    a.p = dist::f_upper_tail(a.f, double(a.df_between), double(a.df_within));
    return a;
}

HsdResult tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::Domain, "alpha must lie in (0, 1)");
    HsdResult h;
    h.alpha = alpha;
    h.anova = anova(groups);
    const int k = int(groups.size());
    const double df = double(h.anova.df_within);
    h.q_critical = dist::studentized_range_quantile(alpha, k, df);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            HsdPair p;
            p.i = i;
            p.j = j;
            p.mean_difference = h.anova.group_means[size_t(i)] - h.anova.group_means[size_t(j)];
            const double se = std::sqrt(h.anova.mse_within / 2.0 *
                                        (1.0 / double(h.anova.group_sizes[size_t(i)]) +
                                         1.0 / double(h.anova.group_sizes[size_t(j)])));
            p.critical_value = h.q_critical * se;
            p.q_statistic = std::abs(p.mean_difference) / se;
            p.p_adjusted = 1.0 - dist::studentized_range_cdf(p.q_statistic, k, df);
            p.significant = std::abs(p.mean_difference) > p.critical_value;
            h.pairs.push_back(p);
        }
    return h;
}

LinearModel ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::Size, "ols_fit needs equal-length samples");
    if (x.size() < 3) throw Error(ErrorCode::Domain, "ols_fit needs at least 3 samples");
    LinearModel m;
    m.n = int64_t(x.size());
    const double n = double(x.size());
    m.x_mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    m.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - m.x_mean) * (x[i] - m.x_mean);
        sxy += (x[i] - m.x_mean) * (y[i] - m.y_mean);
        syy += (y[i] - m.y_mean) * (y[i] - m.y_mean);
    }
    if (sxx <= 0) throw Error(ErrorCode::Degenerate, "ols_fit: predictor has zero variance");
    m.slope = sxy / sxx;
    m.intercept = m.y_mean - m.slope * m.x_mean;
    double sse = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double e = (y[i] - m.y_mean) - m.slope * (x[i] - m.x_mean);
        sse += e * e;
    }
    const double df = n - 2.0;
    m.residual_se = std::sqrt(sse / df);
    m.r2 = syy > 0 ? std::max(0.0, 1.0 - sse / syy) : 0.0;
    m.slope_se = std::sqrt(sse / df / sxx);
    if (m.slope_se == 0) m.slope_p = m.slope == 0 ? 1.0 : 0.0;
    else m.slope_p = dist::student_t_two_sided(m.slope / m.slope_se, df);
    return m;
}

}  // namespace ensopon
