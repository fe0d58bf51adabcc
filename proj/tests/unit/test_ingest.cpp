#include <sstream>

#include "doctest.h"
#include "ensopon/error.hpp"
#include "ensopon/ingest.hpp"
#include "ensopon/region_map.hpp"

using namespace ensopon;
using namespace std::chrono;

namespace {

const char* kFiveRows =
    "Event ID,Date Event Began,Area Affected,Event Type,Number of Customers Affected,Demand Loss (MW)\n"
    "A1,2005-07-10,Texas,Severe Weather - Thunderstorms,120000,300\n"
    "A2,2005-07-21,TX,Vandalism,,\n"
    "A3,2005-07-02,Ohio,Winter Storm,Unknown,\n"
    "A4,2010-06-15,CA,Fuel Supply Emergency,5000,\n"
    "A5,2011-08-27,NC,Hurricane Irene,800000,2500\n";

OutageRecord rec(std::string state, int y, unsigned m, unsigned d) {
    OutageRecord r;
    r.event_id = state + std::to_string(y) + std::to_string(m) + std::to_string(d);
    r.begin_date = Date{year(y), month(m), day(d)};
    r.state = std::move(state);
    r.cause_category = CauseCategory::SevereWeather;
    r.cause_text = "Severe Weather";
    return r;
}

}  // namespace

TEST_CASE("five-row fixture keeps the three severe-weather rows") {
    auto res = parse_outage_records(kFiveRows);
    REQUIRE(res.records.size() == 3);
    CHECK(res.dropped.not_weather == 2);
    CHECK(res.records[0].state == "TX");
    CHECK(res.records[1].state == "OH");
    CHECK(res.records[0].customers_affected == 120000);
    CHECK_FALSE(res.records[1].customers_affected.has_value());
    CHECK(res.records[2].demand_loss_mw == 2500.0);
}

TEST_CASE("empty begin date is dropped and counted") {
    auto res = parse_outage_records(
        "date event began,state,cause\n,TX,Severe Weather\n2004-05-01,TX,Severe Weather\n");
    CHECK(res.records.size() == 1);
    CHECK(res.dropped.incomplete == 1);
}

TEST_CASE("window, Alaska/Hawaii and unknown states are filtered") {
    auto res = parse_outage_records(
        "date,state,cause\n"
        "1999-12-31,TX,storm\n"
        "2023-04-01,TX,storm\n"
        "2010-01-05,AK,storm\n"
        "2010-01-05,Hawaii,storm\n"
        "2010-01-05,Atlantis,storm\n"
        "2010-01-05,Georgia,ice storm\n");
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].state == "GA");
    CHECK(res.dropped.out_of_window == 2);
    CHECK(res.dropped.non_continental == 2);
    CHECK(res.dropped.unknown_state == 1);
}

TEST_CASE("outage table errors") {
    CHECK_THROWS_WITH_AS(parse_outage_records("foo,bar\n1,2\n"), doctest::Contains(""), Error);
    try {
        parse_outage_records("foo,bar\n1,2\n");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Header);
    }
    try {
        parse_outage_records("date,state,cause\n2005-01-01,TX,vandalism\n");
        FAIL("expected E_EMPTY");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Empty);
    }
}

TEST_CASE("parse -> serialize -> parse is idempotent") {
    auto first = parse_outage_records(kFiveRows).records;
    std::ostringstream os;
    write_outage_records(os, first);
    auto second = parse_outage_records(os.str()).records;
    CHECK(first == second);
}

TEST_CASE("cause allow-list") {
    CauseFilter f;
    CHECK(f.classify("Severe Weather - Thunderstorms") == CauseCategory::SevereWeather);
    CHECK(f.classify("Ice Storm") == CauseCategory::SevereWeather);
    CHECK(f.classify("Public Appeal to Reduce Electricity Usage - Wildfires") == CauseCategory::SevereWeather);
    CHECK(f.classify("Vandalism") == CauseCategory::Other);
    CHECK(f.classify("Suspicious activity") == CauseCategory::Other);  // "ice" is not a whole word here
}

TEST_CASE("monthly PON counts by begin month") {
    const auto& map = default_region_map();
    SUBCASE("zero records give 277 zero months") {
        auto pon = monthly_pon({}, map);
        CHECK(pon.all_us.size() == 277);
        CHECK(pon.regions.size() == 12);
        CHECK(pon.total_events() == 0);
        for (double v : pon.all_us.values) CHECK(v == 0);
    }
    SUBCASE("hand count") {
        auto pon = monthly_pon({rec("TX", 2005, 7, 1), rec("TX", 2005, 7, 30), rec("OH", 2005, 7, 12)}, map);
        CHECK(*pon.regions.at(RegionId::TE).at({2005, 7}) == 2);
        CHECK(*pon.regions.at(RegionId::OV).at({2005, 7}) == 1);
        CHECK(*pon.all_us.at({2005, 7}) == 3);
        CHECK(*pon.all_us.at({2005, 8}) == 0);
    }
    SUBCASE("conservation") {
        std::vector<OutageRecord> rs;
        for (int i = 0; i < 200; ++i)
            rs.push_back(rec(std::string(continental_states()[size_t(i * 7) % 48]), 2000 + i % 23, unsigned(3 + i % 9),
                             unsigned(1 + i % 28)));
        auto pon = monthly_pon(rs, map);
        double sum = 0;
        for (const auto& [_, s] : pon.regions)
            for (double v : s.values) sum += v;
        CHECK(sum == 200);
        CHECK(pon.total_events() == 200);
    }
    SUBCASE("state missing from the map") {
        OutageRecord r = rec("TX", 2005, 7, 1);
        r.state = "PR";
        CHECK_THROWS_AS(monthly_pon({r}, map), Error);
    }
}

TEST_CASE("sparse-region threshold boundary") {
    RegionalPon pon = monthly_pon({}, default_region_map());
    pon.regions.at(RegionId::NR).values[5] = 19;
    pon.regions.at(RegionId::SW).values[5] = 20;
    for (auto& [r, s] : pon.regions)
        if (r != RegionId::NR && r != RegionId::SW) s.values[0] = 25;
    auto e = exclude_sparse_regions(pon, 20);
    CHECK(e.excluded == std::vector<RegionId>{RegionId::NR});
    CHECK(e.eligible.size() == 11);
    CHECK(e.totals.at(RegionId::SW) == 20);

    auto none = exclude_sparse_regions(monthly_pon({}, default_region_map()), 20);
    CHECK(none.eligible.empty());
    CHECK_FALSE(none.warnings.empty());
}

TEST_CASE("default region map") {
    const auto& map = default_region_map();
    CHECK(map.regions().size() == 12);
    int states = 0;
    for (const auto& r : map.regions()) states += int(r.states.size());
    CHECK(states == 48);
    for (auto s : continental_states()) CHECK(map.has_state(s));
    CHECK(map.region_of_state("CA") == RegionId::W);
    CHECK(map.region_of_state("OH") == RegionId::OV);
    CHECK(map.region_of_state("TX") == RegionId::TE);
    CHECK(map.overlaps().empty());
    CHECK(load_region_map(map.to_config()).region_of_state("NC") == map.region_of_state("NC"));
}

TEST_CASE("region map errors") {
    std::string text(default_region_map_text());
    SUBCASE("missing AZ") {
        auto pos = text.find("\"AZ\", ");
        REQUIRE(pos != std::string::npos);
        text.erase(pos, 6);
        try {
            load_region_map(text);
            FAIL("expected E_REGION");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Region);
        }
    }
    SUBCASE("state assigned twice") {
        text += "\nregions.NE.states = [\"ME\", \"TX\"]\n";
        CHECK_THROWS_AS(load_region_map(text), Error);
    }
    SUBCASE("unknown region id") {
        text += "\nregions.XX.states = [\"TX\"]\n";
        CHECK_THROWS_AS(load_region_map(text), Error);
    }
    SUBCASE("overlapping boxes are reported, first region wins") {
        text += "\nregions.NE.bbox = [38.0, 40.0, -84.0, -80.0]\n";
        auto map = load_region_map(text);
        CHECK_FALSE(map.overlaps().empty());
    }
}

TEST_CASE("ENSO index tables") {
    IndexParseOptions opt;
    opt.window = {{2000, 3}, {2000, 8}};
    opt.lead_months = 2;
    SUBCASE("long format with lead months") {
        std::string t = "date,value\n";
        for (int m = 1; m <= 9; ++m) t += "2000-0" + std::to_string(m) + "," + std::to_string(m * 0.1) + "\n";
        auto s = parse_enso_index(t, IndexKind::MEI, opt).values;
        CHECK(s.start == YearMonth{2000, 1});
        CHECK(s.last() == YearMonth{2000, 8});
    }
    SUBCASE("wide format") {
        auto s = parse_enso_index("year,jan,feb,mar,apr,may,jun,jul,aug,sep,oct,nov,dec\n"
                                  "2000,1,2,3,4,5,6,7,8,9,10,11,12\n",
                                  IndexKind::Nino34, opt)
                     .values;
        CHECK(*s.at({2000, 4}) == 4);
    }
    SUBCASE("gap inside the window") {
        try {
            parse_enso_index("date,value\n2000-03,1\n2000-04,1\n2000-06,1\n2000-07,1\n2000-08,1\n", IndexKind::MEI,
                             opt);
            FAIL("expected E_GAP");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Gap);
        }
    }
    SUBCASE("missing sentinel counts as a gap") {
        CHECK_THROWS_AS(parse_enso_index("date,value\n2000-03,1\n2000-04,-99.99\n2000-05,1\n2000-06,1\n2000-07,1\n"
                                         "2000-08,1\n",
                                         IndexKind::MEI, opt),
                        Error);
    }
    SUBCASE("short coverage") {
        try {
            parse_enso_index("date,value\n2000-03,1\n2000-04,1\n", IndexKind::MEI, opt);
            FAIL("expected E_COVERAGE");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Coverage);
        }
    }
}

TEST_CASE("model frequency tables") {
    auto m = parse_model_frequency_csv("date,OV,NE\n2015-01,1,2\n2015-02,3,4\n", "M1", Scenario::SSP5_85);
    CHECK(m.heatwave_frequency.size() == 2);
    CHECK(*m.heatwave_frequency.at(RegionId::NE).at({2015, 2}) == 4);
    CHECK(scenario_name(parse_scenario("ssp245")) == "ssp245");
    CHECK_THROWS_AS(parse_model_frequency_csv("date,ZZ\n2015-01,1\n", "M1", Scenario::SSP2_45), Error);
}
