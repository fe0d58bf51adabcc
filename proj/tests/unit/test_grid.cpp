#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "ensopon/error.hpp"
#include "ensopon/grid.hpp"

using namespace ensopon;

namespace {

DailyGridField random_field(int64_t nlat, int64_t nlon, int64_t ntime, uint64_t seed) {
    DailyGridField f;
    f.grid = {30.0, 0.5, -100.0, 0.5, nlat, nlon};
    f.t0 = to_epoch_day(Date{std::chrono::year(2001), std::chrono::January, std::chrono::day(1)});
    f.ntime = ntime;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(10.0f, 7.0f);
    f.values.resize(size_t(nlat * nlon * ntime));
    for (auto& v : f.values) v = n(rng);
    return f;
}

}  // namespace

TEST_CASE("1x1x1 grid") {
    DailyGridField f;
    f.grid = {40.0, 0.5, -90.0, 0.5, 1, 1};
    f.ntime = 1;
    f.values = {20.0f};
    auto g = decode_grid(encode_grid(f));
    CHECK(g.values.size() == 1);
    CHECK(g.values[0] == 20.0f);
    CHECK(g.cell_has_data() == std::vector<bool>{true});
}

TEST_CASE("GRID1 round trip is bit-identical and keeps the mask") {
    auto f = random_field(4, 5, 365, 11);
    for (int64_t t = 0; t < f.ntime; ++t) f.at(t, 7) = std::numeric_limits<float>::quiet_NaN();
    const auto bytes = encode_grid(f);
    CHECK(bytes.substr(0, 4) == "GRD1");
    auto g = decode_grid(bytes);
    CHECK(g.grid == f.grid);
    CHECK(g.t0 == f.t0);
    REQUIRE(g.values.size() == f.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) {
        if (std::isnan(f.values[i])) CHECK(std::isnan(g.values[i]));
        else CHECK(std::memcmp(&f.values[i], &g.values[i], sizeof(float)) == 0);
    }
    CHECK(g.cell_has_data()[7] == false);

    const auto path = std::filesystem::temp_directory_path() / "ensopon_grid_roundtrip.grd";
    save_grid(path, f);
    CHECK(encode_grid(load_grid(path)) == bytes);
    std::filesystem::remove(path);
}

TEST_CASE("sentinel values become missing") {
    auto f = random_field(1, 2, 3, 1);
    auto bytes = encode_grid(f);
    // overwrite the first payload value with the sentinel
    const float s = kDefaultMissingSentinel;
    std::memcpy(bytes.data() + bytes.size() - 6 * sizeof(float), &s, sizeof s);
    auto g = decode_grid(bytes);
    CHECK(std::isnan(g.values[0]));
}

TEST_CASE("GRID1 decode errors") {
    auto f = random_field(2, 2, 3, 2);
    auto bytes = encode_grid(f);
    SUBCASE("magic") {
        bytes[0] = 'X';
        try {
            decode_grid(bytes);
            FAIL("expected E_SCHEMA");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Schema);
        }
    }
    SUBCASE("payload size") {
        bytes.resize(bytes.size() - 4);
        try {
            decode_grid(bytes);
            FAIL("expected E_SIZE");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Size);
        }
    }
    SUBCASE("NaN where the sentinel is expected") {
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(bytes.data() + bytes.size() - sizeof(float), &nan, sizeof nan);
        CHECK_THROWS_AS(decode_grid(bytes), Error);
    }
}

TEST_CASE("diagnostics flag mixed validity and resolution") {
    auto f = random_field(2, 2, 10, 3);
    f.at(4, 1) = std::numeric_limits<float>::quiet_NaN();
    for (int64_t t = 0; t < 10; ++t) f.at(t, 3) = std::numeric_limits<float>::quiet_NaN();
    auto d = diagnose(f);
    CHECK(d.mixed_validity_cells == 1);
    CHECK(d.missing_cells == 1);
    CHECK_FALSE(d.non_reference_resolution);
    f.grid.dlat = 1.0;
    CHECK(diagnose(f).non_reference_resolution);
}

TEST_CASE("CSV grid adapter") {
    auto f = parse_grid_csv("date,lat,lon,value\n2001-01-01,30,-100,1.5\n2001-01-01,30,-99.5,2.5\n"
                            "2001-01-02,30,-100,3.5\n2001-01-02,30,-99.5,4.5\n",
                            Variable::T2m);
    CHECK(f.grid.nlat == 1);
    CHECK(f.grid.nlon == 2);
    CHECK(f.ntime == 2);
    CHECK(f.at(1, 1) == 4.5f);
}

TEST_CASE("monthly variant round trip") {
    MonthlyGridField m;
    m.grid = {30.0, 1.0, -100.0, 1.0, 2, 2};
    m.start = {2000, 1};
    m.nmonths = 3;
    m.values = {1, 2, 3, 0, 4, 5, 6, 0, 7, 8, 9, 0};
    m.cell_valid = {true, true, true, false};
    for (int64_t t = 0; t < 3; ++t) m.at(t, 3) = std::numeric_limits<float>::quiet_NaN();
    const auto path = std::filesystem::temp_directory_path() / "ensopon_monthly.grd";
    save_monthly_grid(path, m);
    auto r = load_monthly_grid(path);
    CHECK(r.start == m.start);
    CHECK(r.nmonths == 3);
    CHECK(r.cell_valid == m.cell_valid);
    CHECK(r.at(2, 2) == 9.0f);
    std::filesystem::remove(path);
}
