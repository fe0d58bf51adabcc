#pragma once

#include <cstdint>

namespace ensopon::dist {

double normal_cdf(double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double student_t_two_sided(double t, double df);

/// Upper tail P(F >= f) for the F distribution with (df1, df2) degrees.
double f_upper_tail(double f, double df1, double df2);

/// CDF of the studentized range Q for k means and df error degrees of
/// freedom (df <= 0 or infinite means the df -> infinity limit).
/// Evaluated by nested adaptive quadrature:
///   P(Q <= q) = ∫ g_df(s) W(q s) ds,  W(w) = k ∫ φ(z) [Φ(z) - Φ(z - w)]^(k-1) dz
double studentized_range_cdf(double q, int k, double df);

/// Upper quantile q with P(Q <= q) = 1 - alpha.
double studentized_range_quantile(double alpha, int k, double df);

}  // namespace ensopon::dist
