#include <cmath>
#include <random>

#include "doctest.h"
#include "ensopon/distributions.hpp"
#include "ensopon/error.hpp"
#include "ensopon/stats.hpp"
#include "oracles/oracles.hpp"

using namespace ensopon;

namespace {

std::vector<double> noise(size_t n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("lagged_cc identities") {
    std::mt19937_64 rng(1);
    auto x = noise(120, rng);
    CHECK(lagged_cc(x, x, 0) == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<double> c(x.size(), 2.0);
    try {
        lagged_cc(c, x, 0);
        FAIL("expected E_DEGENERATE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Degenerate);
    }
    CHECK_THROWS_AS(lagged_cc(x, x, 118), Error);
}

TEST_CASE("lagged_cc equals the direct-sum oracle") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = noise(96, rng), y = noise(96, rng);
        for (int k = -12; k <= 12; ++k) {
            CHECK(std::abs(lagged_cc(x, y, k) - oracle::cc_full(x, y, k)) < 1e-12);
            CHECK(std::abs(lagged_cc(x, y, k, CcNormalization::Overlap) - oracle::cc_overlap(x, y, k)) < 1e-12);
        }
    }
}

TEST_CASE("planted lag is recovered") {
    std::mt19937_64 rng(3);
    auto x = noise(400, rng);
    std::vector<double> y(400, 0.0);
    for (size_t t = 2; t < 400; ++t) y[t] = x[t - 2];
    auto r = max_cc(x, y, -12, 12, CcMode::MaxAbs);
    CHECK(r.lag == 2);
    std::vector<double> neg(400, 0.0);
    for (size_t t = 3; t < 400; ++t) neg[t] = -x[t - 3];
    auto n = max_cc(x, neg, 0, 12, CcMode::MostNegative, CcNormalization::Overlap);
    CHECK(n.lag == 3);
    CHECK(n.r == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("max_cc modes, ties and symmetry") {
    std::mt19937_64 rng(4);
    auto x = noise(200, rng);
    auto self = max_cc(x, x, -12, 12, CcMode::MaxAbs);
    CHECK(self.lag == 0);
    CHECK(self.r == doctest::Approx(1.0));
    for (int t = 0; t < 10; ++t) {
        auto a = noise(150, rng), b = noise(150, rng);
        CHECK(max_cc(a, b, -12, 12, CcMode::MaxAbs).lag == -max_cc(b, a, -12, 12, CcMode::MaxAbs).lag);
        // exhaustive enumeration
        int best = 0;
        double br = 2;
        for (int k = 0; k <= 12; ++k) {
            double r = oracle::cc_full(a, b, k);
            if (r < br) br = r, best = k;
        }
        auto m = max_cc(a, b, 0, 12, CcMode::MostNegative);
        CHECK(m.lag == best);
        CHECK(m.r == doctest::Approx(br).epsilon(1e-12));
    }
    std::vector<CorrelationResult> tie(3);
    for (int i = 0; i < 3; ++i) tie[size_t(i)] = {0.5, i - 1, 30, 0.01, true};
    CHECK(pick_extremum(tie, CcMode::MaxAbs) == 1);
    tie[1].r = -0.5;
    tie[1].computable = false;
    CHECK(tie[size_t(pick_extremum(tie, CcMode::MaxAbs))].lag == 1);
}

TEST_CASE("affine invariance of lagged_cc") {
    std::mt19937_64 rng(5);
    auto x = noise(100, rng), y = noise(100, rng);
    auto xs = x, yn = y;
    for (auto& v : xs) v = 3 * v + 7;
    for (auto& v : yn) v = -2 * v + 1;
    for (int k : {-4, 0, 5}) {
        CHECK(lagged_cc(xs, y, k) == doctest::Approx(lagged_cc(x, y, k)).epsilon(1e-12));
        CHECK(lagged_cc(x, yn, k) == doctest::Approx(-lagged_cc(x, y, k)).epsilon(1e-12));
    }
}

TEST_CASE("t-test significance against frozen scipy values") {
    const auto frozen = oracle::frozen();
    for (const auto& e : frozen["cc_p"]) {
        auto s = cc_significance(e["r"].get<double>(), e["n"].get<int64_t>());
        CHECK(s.p_value == doctest::Approx(e["p"].get<double>()).epsilon(1e-10));
    }
    CHECK(cc_significance(0.5, 20).p_value == doctest::Approx(0.0249).epsilon(0.01));
    CHECK(cc_significance(0.0, 30).p_value == 1.0);
    auto d = cc_significance(-1.0, 30);
    CHECK(d.p_value == 0.0);
    CHECK(d.degenerate);
    CHECK_THROWS_AS(cc_significance(0.2, 3), Error);
}

TEST_CASE("F and studentized range distributions against frozen scipy values") {
    const auto fz = oracle::frozen();
    for (const auto& e : fz["f_sf"])
        CHECK(dist::f_upper_tail(e["f"], e["d1"], e["d2"]) == doctest::Approx(e["p"].get<double>()).epsilon(1e-10));
    for (const auto& e : fz["qtukey"])
        CHECK(dist::studentized_range_quantile(e["alpha"], e["k"], e["df"]) ==
              doctest::Approx(e["q"].get<double>()).epsilon(1e-7));
    for (const auto& e : fz["ptukey"])
        CHECK(dist::studentized_range_cdf(e["q"], e["k"], e["df"]) ==
              doctest::Approx(e["cdf"].get<double>()).epsilon(1e-8));
    // published table value q(0.05; 3, 10) = 3.877
    CHECK(dist::studentized_range_quantile(0.05, 3, 10) == doctest::Approx(3.877).epsilon(1e-3));
}

TEST_CASE("permutation p is calibrated on white noise") {
    std::mt19937_64 rng(6);
    int below = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        auto x = noise(96, rng), y = noise(96, rng);
        PermutationOptions opt;
        opt.permutations = 199;
        opt.seed = uint64_t(t);
        const double p = permutation_p(x, y, opt);
        CHECK(p > 0);
        CHECK(p <= 1);
        below += p < 0.1;
    }
    CHECK(double(below) / trials == doctest::Approx(0.1).epsilon(0.6));
    std::mt19937_64 r2(7);
    auto perm = circular_block_permutation(30, 12, r2);
    std::sort(perm.begin(), perm.end());
    for (int64_t i = 0; i < 30; ++i) CHECK(perm[size_t(i)] == i);
}

TEST_CASE("masked lag scan") {
    std::mt19937_64 rng(8);
    auto x = noise(120, rng);
    std::vector<double> y(120, 0.0);
    for (size_t t = 4; t < 120; ++t) y[t] = -x[t - 4] + 0.1 * noise(1, rng)[0];
    std::vector<bool> xv(120, true), yv(120, true);
    for (size_t t = 0; t < 120; t += 3) xv[t] = false;
    LagScanOptions opt;
    auto r = lag_scan(x, xv, y, yv, opt);
    CHECK(r.curve.size() == 13);
    CHECK(r.best.lag == 4);
    CHECK(r.best.r < -0.9);
    CHECK(r.best.n_samples == 116 - 39);

    opt.min_samples = 200;
    CHECK_FALSE(lag_scan(x, xv, y, yv, opt).best.computable);

    opt.min_samples = 8;
    opt.method = SignificanceMethod::Permutation;
    opt.permutations = 199;
    auto p = lag_scan(x, xv, y, yv, opt);
    CHECK(p.best.lag == 4);
    CHECK(p.best.p_value == doctest::Approx(1.0 / 200));
}

TEST_CASE("ANOVA") {
    auto a = anova({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
    CHECK(a.f == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(a.p == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(a.df_between == 2);
    CHECK(a.df_within == 6);
    double weighted = 0;
    for (size_t g = 0; g < 3; ++g) weighted += double(a.group_sizes[g]) * a.group_effects[g];
    CHECK(std::abs(weighted) < 1e-12);
    try {
        anova({{2, 2}, {2, 2}, {2, 2}});
        FAIL("expected E_DEGENERATE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Degenerate);
    }
    CHECK_THROWS_AS(anova({{1, 2, 3}}), Error);
    CHECK_THROWS_AS(anova({{1, 2, 3}, {4}}), Error);
}

TEST_CASE("two-group F equals pooled t squared") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        auto g1 = noise(12, rng), g2 = noise(17, rng, 2.0);
        const double m1 = oracle::mean(g1), m2 = oracle::mean(g2);
        double ss = 0;
        for (double v : g1) ss += (v - m1) * (v - m1);
        for (double v : g2) ss += (v - m2) * (v - m2);
        const double sp2 = ss / double(g1.size() + g2.size() - 2);
        const double tstat = (m1 - m2) / std::sqrt(sp2 * (1.0 / g1.size() + 1.0 / g2.size()));
        CHECK(anova({g1, g2}).f == doctest::Approx(tstat * tstat).epsilon(1e-9));
    }
}

TEST_CASE("Tukey HSD") {
    SUBCASE("identical groups") {
        auto h = tukey_hsd({{1, 2, 3, 4}, {1, 2, 3, 4}});
        CHECK_FALSE(h.pairs[0].significant);
    }
    SUBCASE("one shifted group") {
        std::mt19937_64 rng(10);
        auto a = noise(30, rng), b = noise(30, rng), c = noise(30, rng);
        for (auto& v : b) v += 3;
        auto h = tukey_hsd({a, b, c});
        REQUIRE(h.pairs.size() == 3);
        CHECK(h.pairs[0].significant);        // (0,1)
        CHECK_FALSE(h.pairs[1].significant);  // (0,2)
        CHECK(h.pairs[2].significant);        // (1,2)
        for (const auto& p : h.pairs)
            CHECK(p.significant == (std::abs(p.mean_difference) > p.critical_value));
    }
    SUBCASE("frozen direct-formula fixtures") {
        const auto frozen = oracle::frozen();
        for (const auto& fx : frozen["hsd"]) {
            auto groups = fx["groups"].get<std::vector<std::vector<double>>>();
            auto h = tukey_hsd(groups, 0.05);
            CHECK(h.q_critical == doctest::Approx(fx["q_critical"].get<double>()).epsilon(1e-7));
            size_t i = 0;
            for (const auto& p : fx["pairs"]) {
                CHECK(h.pairs[i].significant == p["significant"].get<bool>());
                CHECK(h.pairs[i].critical_value == doctest::Approx(p["critical"].get<double>()).epsilon(1e-7));
                ++i;
            }
        }
    }
}

TEST_CASE("OLS") {
    std::vector<double> x{1, 2, 3, 4, 5}, y;
    for (double v : x) y.push_back(4 * v + 1);
    auto m = ols_fit(x, y);
    CHECK(m.slope == doctest::Approx(4));
    CHECK(m.intercept == doctest::Approx(1));
    CHECK(m.r2 == doctest::Approx(1));
    CHECK(m.predict(m.x_mean) == doctest::Approx(m.y_mean));

    std::mt19937_64 rng(11);
    auto a = noise(40, rng), b = noise(40, rng);
    auto o = oracle::normal_equations(a, b);
    auto f = ols_fit(a, b);
    CHECK(std::abs(f.slope - o.slope) < 1e-10);
    CHECK(std::abs(f.intercept - o.intercept) < 1e-10);
    try {
        ols_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3});
        FAIL("expected E_DEGENERATE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Degenerate);
    }
}

TEST_CASE("OLS slope p is roughly uniform under independence") {
    std::mt19937_64 rng(12);
    int reject = 0;
    for (int t = 0; t < 400; ++t) {
        auto a = noise(24, rng), b = noise(24, rng);
        reject += ols_fit(a, b).slope_p <= 0.05;
    }
    CHECK(reject / 400.0 == doctest::Approx(0.05).epsilon(0.6));
}
