#include <cmath>
#include <random>

#include "doctest.h"
#include "ensopon/error.hpp"
#include "ensopon/projection.hpp"
#include "oracles/oracles.hpp"

using namespace ensopon;

namespace {

// Monthly series whose MAM months carry f(year) and other months carry junk.
template <class F>
MonthlyTimeSeries spring(int y0, int y1, F f) {
    std::vector<double> v;
    for (int y = y0; y <= y1; ++y)
        for (int m = 1; m <= 12; ++m) v.push_back(m >= 3 && m <= 5 ? f(y) : 100.0 + m);
    return MonthlyTimeSeries({y0, 1}, v);
}

MonthlyTimeSeries constant(int y0, int y1, double c) {
    return spring(y0, y1, [c](int) { return c; });
}

ModelSeries member(std::string name, Scenario sc, double level, int y1 = 2100) {
    ModelSeries m;
    m.model = std::move(name);
    m.scenario = sc;
    m.heatwave_frequency[RegionId::OV] = constant(2015, y1, level);
    return m;
}

RegionalFit line(double a, double b) {
    RegionalFit f;
    f.region = RegionId::OV;
    f.model.intercept = a;
    f.model.slope = b;
    f.eligible = true;
    return f;
}

}  // namespace

TEST_CASE("springtime mean ignores other months") {
    auto s = spring(2000, 2002, [](int y) { return double(y - 2000); });
    auto a = seasonal_mean(s);
    CHECK(a.first_year == 2000);
    CHECK(*a.at(2001) == doctest::Approx(1.0));
    CHECK(*a.mean(2000, 2002) == doctest::Approx(1.0));
    CHECK_FALSE(a.at(1999).has_value());
}

TEST_CASE("period names") {
    CHECK(ratio_period_name(RatioPeriod::MidTerm) == "mid_term");
    CHECK(ratio_period_years(RatioPeriod::LongTerm).first == 2081);
    CHECK(ratio_period_years(RatioPeriod::HistSplit).last == 2023);
    CHECK(parse_projection_mode("ensemble_mean_first") == ProjectionMode::EnsembleMeanFirst);
}

TEST_CASE("historical amplification") {
    SUBCASE("identical periods") {
        auto r = historical_amplification(RegionId::OV, constant(2000, 2023, 3), constant(2000, 2023, 5));
        CHECK(r.delta_d == doctest::Approx(0.0));
        CHECK(r.delta_pon == doctest::Approx(1.0));
    }
    SUBCASE("doubled outages in the late period") {
        auto pon = spring(2000, 2023, [](int y) { return y >= 2011 ? 8.0 : 4.0; });
        auto d = spring(2000, 2023, [](int y) { return y >= 2011 ? 5.0 : 2.0; });
        auto r = historical_amplification(RegionId::OV, d, pon);
        CHECK(r.delta_pon == doctest::Approx(2.0));
        CHECK(r.delta_d == doctest::Approx(3.0));
        CHECK(r.baseline_d == doctest::Approx(2.0));
    }
    SUBCASE("zero baseline") {
        auto pon = spring(2000, 2023, [](int y) { return y >= 2011 ? 1.0 : 0.0; });
        auto r = historical_amplification(RegionId::OV, constant(2000, 2023, 1), pon);
        CHECK(r.zero_baseline);
        CHECK(std::isnan(r.delta_pon));
    }
}

TEST_CASE("regional fit") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> dv(24);
    for (auto& x : dv) x = 3 + n(rng);
    auto d = spring(2000, 2023, [&](int y) { return dv[size_t(y - 2000)]; });
    auto pon = spring(2000, 2023, [&](int y) { return 2 * dv[size_t(y - 2000)]; });
    auto f = fit_regional_model(RegionId::OV, d, pon);
    CHECK(f.model.slope == doctest::Approx(2.0));
    CHECK(f.model.intercept == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(f.eligible);
    CHECK(f.r == doctest::Approx(1.0));

    std::vector<double> yv(24);
    for (auto& x : yv) x = 5 + n(rng);
    auto noisy = spring(2000, 2023, [&](int y) { return yv[size_t(y - 2000)]; });
    auto g = fit_regional_model(RegionId::OV, d, noisy);
    auto want = oracle::normal_equations(dv, yv);
    CHECK(g.model.slope == doctest::Approx(want.slope).epsilon(1e-10));
    CHECK(g.model.intercept == doctest::Approx(want.intercept).epsilon(1e-10));

    CHECK_THROWS_AS(fit_regional_model(RegionId::OV, constant(2000, 2023, 1), pon), Error);
}

TEST_CASE("identity fit reproduces model frequencies") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(0, 1)}};
    ModelSeries m;
    m.model = "M1";
    m.heatwave_frequency[RegionId::OV] = spring(2015, 2100, [](int y) { return 0.1 * (y - 2015); });
    auto e = project_ensemble({m}, fits);
    REQUIRE(e.members.size() == 1);
    const auto& pon = e.members[0].pon.at(RegionId::OV);
    const auto& fr = e.members[0].frequency.at(RegionId::OV);
    for (int y = 2015; y <= 2100; ++y) CHECK(*pon.at(y) == doctest::Approx(*fr.at(y)));
    CHECK(e.clipped == 0);
}

TEST_CASE("envelopes are pointwise min and max over members") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(0, 2)}};
    auto e = project_ensemble({member("A", Scenario::SSP2_45, 1), member("B", Scenario::SSP2_45, 3)}, fits);
    const auto& f = e.frequency.at(Scenario::SSP2_45).at(RegionId::OV);
    const auto& p = e.pon.at(Scenario::SSP2_45).at(RegionId::OV);
    REQUIRE(!f.years.empty());
    for (size_t i = 0; i < f.years.size(); ++i) {
        CHECK(f.min[i] == doctest::Approx(1));
        CHECK(f.max[i] == doctest::Approx(3));
        CHECK(f.mean[i] == doctest::Approx(2));
        CHECK(p.min[i] == doctest::Approx(2));
        CHECK(p.max[i] == doctest::Approx(6));
        CHECK(p.min[i] <= p.mean[i]);
        CHECK(p.mean[i] <= p.max[i]);
        CHECK(f.members[i] == 2);
    }
}

TEST_CASE("negative predictions are clipped") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(-10, 1)}};
    auto e = project_ensemble({member("A", Scenario::SSP2_45, 2)}, fits);
    CHECK(e.clipped > 0);
    CHECK(*e.members[0].pon.at(RegionId::OV).at(2050) == 0.0);
}

TEST_CASE("modes agree for a linear fit without clipping") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(1, 2)}};
    std::vector<ModelSeries> ms{member("A", Scenario::SSP2_45, 1), member("B", Scenario::SSP2_45, 4)};
    auto a = project_ensemble(ms, fits, ProjectionMode::PerModel);
    auto b = project_ensemble(ms, fits, ProjectionMode::EnsembleMeanFirst);
    const auto& pa = a.pon.at(Scenario::SSP2_45).at(RegionId::OV);
    const auto& pb = b.pon.at(Scenario::SSP2_45).at(RegionId::OV);
    for (size_t i = 0; i < pa.mean.size(); ++i) CHECK(pa.mean[i] == doctest::Approx(pb.mean[i]));
}

TEST_CASE("future ratios") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(0, 2)}};
    std::map<RegionId, MonthlyTimeSeries> obs{{RegionId::OV, constant(2000, 2023, 2)}};
    RegionalPon opon;
    opon.all_us = constant(2000, 2023, 4);
    opon.regions[RegionId::OV] = constant(2000, 2023, 4);

    auto same = project_ensemble({member("A", Scenario::SSP2_45, 2)}, fits);
    auto r = future_amplified_ratios(same, {RatioPeriod::MidTerm}, obs, opon);
    REQUIRE(!r.empty());
    CHECK(r[0].delta_d == doctest::Approx(0));
    CHECK(r[0].delta_pon == doctest::Approx(1));

    auto twice = project_ensemble({member("A", Scenario::SSP2_45, 4)}, fits);
    r = future_amplified_ratios(twice, {RatioPeriod::LongTerm}, obs, opon);
    CHECK(r[0].delta_d == doctest::Approx(2));
    CHECK(r[0].delta_pon == doctest::Approx(2));
    CHECK(r[0].scenario == Scenario::SSP2_45);

    auto short_run = project_ensemble({member("A", Scenario::SSP2_45, 4, 2050)}, fits);
    try {
        future_amplified_ratios(short_run, {RatioPeriod::LongTerm}, obs, opon);
        FAIL("expected E_COVERAGE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Coverage);
    }
}

TEST_CASE("missing scenario") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(0, 1)}};
    try {
        project_ensemble({member("A", Scenario::SSP2_45, 1)}, fits, ProjectionMode::PerModel, {Scenario::SSP5_85});
        FAIL("expected E_EMPTY");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Empty);
    }
}

TEST_CASE("scaling the model input scales the projection") {
    std::map<RegionId, RegionalFit> fits{{RegionId::OV, line(0.5, 1.5)}};
    auto a = project_ensemble({member("A", Scenario::SSP2_45, 2)}, fits);
    auto b = project_ensemble({member("A", Scenario::SSP2_45, 6)}, fits);
    CHECK(*b.members[0].pon.at(RegionId::OV).at(2060) - 0.5 ==
          doctest::Approx(3 * (*a.members[0].pon.at(RegionId::OV).at(2060) - 0.5)));
}
