#include "ensopon/distributions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ensopon/error.hpp"

namespace ensopon::dist {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Probability that the range of k standard normals is <= w.
double range_cdf_normal(double w, int k) {
    if (w <= 0) return 0.0;
    if (k == 2) return std::erf(w * 0.5);  // 2Φ(w/√2) - 1
    auto integrand = [w, k](double z) {
        double inner = normal_cdf(z) - normal_cdf(z - w);
        if (inner <= 0) return 0.0;
        return kInvSqrt2Pi * std::exp(-0.5 * z * z) * std::pow(inner, k - 1);
    };
    // φ(z) is negligible outside [-9, 9]; split at the modes for the adaptive rule.
    double a = -9.0, b = 9.0;
    double mid = w * 0.5;
    double err = 0;
    double left = GK::integrate(integrand, a, std::min(mid, b), 12, 1e-11, &err);
    double right = mid < b ? GK::integrate(integrand, mid, b, 12, 1e-11, &err) : 0.0;
    return std::min(1.0, double(k) * (left + right));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double student_t_two_sided(double t, double df) {
    if (!(df > 0)) throw Error(ErrorCode::Domain, "t distribution needs df > 0");
    if (std::isinf(t)) return 0.0;
    double x = df / (df + t * t);
    return boost::math::ibeta(df / 2.0, 0.5, x);
}

double f_upper_tail(double f, double df1, double df2) {
    if (!(df1 > 0) || !(df2 > 0)) throw Error(ErrorCode::Domain, "F distribution needs positive df");
    if (f <= 0) return 1.0;
    if (std::isinf(f)) return 0.0;
    double x = df2 / (df2 + df1 * f);
    return boost::math::ibeta(df2 / 2.0, df1 / 2.0, x);
}

double studentized_range_cdf(double q, int k, double df) {
    if (k < 2) throw Error(ErrorCode::Domain, "studentized range needs k >= 2");
    if (q <= 0) return 0.0;
    if (!(df > 0) || std::isinf(df) || df > 1e5) return range_cdf_normal(q, k);

    // s = chi_df / sqrt(df); log density of s
    const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
    auto integrand = [&](double s) {
        if (s <= 0) return 0.0;
        double log_g = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
        return std::exp(log_g) * range_cdf_normal(q * s, k);
    };
    const double spread = 1.0 / std::sqrt(2.0 * df);
    const double upper = 1.0 + std::max(12.0 * spread, std::sqrt(100.0 / df));
    const double lo_peak = std::max(0.0, 1.0 - 8.0 * spread);
    double err = 0, total = 0;
    if (lo_peak > 0) total += GK::integrate(integrand, 0.0, lo_peak, 10, 1e-12, &err);
    total += GK::integrate(integrand, lo_peak, 1.0, 12, 1e-13, &err);
    total += GK::integrate(integrand, 1.0, upper, 12, 1e-13, &err);
    return std::clamp(total, 0.0, 1.0);
}

double studentized_range_quantile(double alpha, int k, double df) {
    if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::Domain, "alpha must lie in (0, 1)");
    const double target = 1.0 - alpha;
    auto f = [&](double q) { return studentized_range_cdf(q, k, df) - target; };
    double lo = 1.0, hi = 8.0;
    while (f(lo) > 0) lo *= 0.5;
    while (f(hi) < 0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e4) throw Error(ErrorCode::Domain, "studentized range quantile did not bracket");
    }
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(36);
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (a + b);
}

}  // namespace ensopon::dist
