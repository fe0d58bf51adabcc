#include "ensopon/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ensopon/error.hpp"
#include "ensopon/extremes.hpp"
#include "json.hpp"

namespace ensopon::synth {

MonthlyTimeSeries oscillator(YearMonth start, int64_t months, const OscillatorConfig& cfg, std::mt19937_64& rng) {
    if (months <= 0) throw Error(ErrorCode::Domain, "oscillator needs a positive length");
    std::normal_distribution<double> eps(0.0, cfg.noise_sd);
    double x1 = 0, x2 = 0;
    std::vector<double> v;
    v.reserve(size_t(months));
    for (int64_t t = -cfg.burn_in; t < months; ++t) {
        double x = cfg.a1 * x1 + cfg.a2 * x2 + eps(rng);
        x2 = x1;
        x1 = x;
        if (t >= 0) v.push_back(x);
    }
    double m = 0, ss = 0;
    for (double x : v) m += x;
    m /= double(v.size());
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / double(v.size()));
    for (double& x : v) x = sd > 0 ? (x - m) / sd : 0.0;
    return MonthlyTimeSeries(start, std::move(v));
}

namespace {

int64_t day_count(int first_year, int years) {
    return to_epoch_day(Date{std::chrono::year(first_year + years), std::chrono::January, std::chrono::day(1)}) -
           to_epoch_day(Date{std::chrono::year(first_year), std::chrono::January, std::chrono::day(1)});
}

double seasonal_cycle(const Date& d) {
    return 15.0 + 10.0 * std::sin(2.0 * std::numbers::pi * (leap_day_of_year(d) - 105) / 365.25);
}

}  // namespace

DailyGridField iid_field(Variable v, const GridGeometry& grid, int first_year, int years, std::mt19937_64& rng) {
    DailyGridField f;
    f.variable = v;
    f.grid = grid;
    f.t0 = to_epoch_day(Date{std::chrono::year(first_year), std::chrono::January, std::chrono::day(1)});
    f.ntime = day_count(first_year, years);
    f.values.resize(size_t(f.ntime * grid.cells()));
    std::normal_distribution<float> normal(15.0f, 5.0f);
    std::gamma_distribution<float> gamma(0.8f, 5.0f);
    for (auto& x : f.values) x = v == Variable::T2m ? normal(rng) : gamma(rng);
    return f;
}

ChainDataset planted_chain(const ChainConfig& cfg, const RegionMap& map) {
    if (cfg.years < 2) throw Error(ErrorCode::Domain, "synthetic chain needs at least two years");
    std::mt19937_64 rng(cfg.seed);
    ChainDataset ds;
    ds.config = cfg;

    const YearMonth first{cfg.first_year, 1};
    const YearMonth index_start = first - cfg.index_lead_months;
    ds.index = oscillator(index_start, int64_t(cfg.years) * 12 + cfg.index_lead_months, cfg.oscillator, rng);

    ds.t2m.variable = Variable::T2m;
    ds.t2m.grid = cfg.grid;
    ds.t2m.t0 = to_epoch_day(Date{std::chrono::year(cfg.first_year), std::chrono::January, std::chrono::day(1)});
    ds.t2m.ntime = day_count(cfg.first_year, cfg.years);
    ds.t2m.values.resize(size_t(ds.t2m.ntime * cfg.grid.cells()));

    const auto owner = map.assign_cells(cfg.grid);
    std::normal_distribution<double> noise(0.0, cfg.temperature_sd);
    for (int64_t t = 0; t < ds.t2m.ntime; ++t) {
        const Date d = ds.t2m.date(t);
        const double base = seasonal_cycle(d);
        const auto lagged = ds.index.at(year_month_of(d) - cfg.lag_months);
        const double shift = lagged ? -cfg.coupling * *lagged : 0.0;
        for (int64_t c = 0; c < cfg.grid.cells(); ++c) {
            double v = base + noise(rng);
            if (owner[size_t(c)] == cfg.planted_region) v += shift;
            ds.t2m.at(t, c) = float(v);
        }
    }
    ds.precip = iid_field(Variable::Precip, cfg.grid, cfg.first_year, cfg.years, rng);

    ExtremeConfig ecfg;
    ecfg.pool_years = YearRange{cfg.first_year, cfg.first_year + cfg.years - 1};
    const auto heat = extreme_frequency(ds.t2m, ecfg, ExtremeKind::Heatwave);
    const MonthlyTimeSeries planted_d = regional_frequency(heat, map, cfg.planted_region);

    int64_t next_id = 1;
    for (RegionId r : kAllRegions) {
        const auto& states = map.info(r).states;
        std::uniform_int_distribution<size_t> pick_state(0, states.size() - 1);
        for (YearMonth ym = cfg.outage_window.first; ym <= cfg.outage_window.last; ym = ym + 1) {
            double lambda = cfg.background_rate;
            if (r == cfg.planted_region) lambda = cfg.planted_base_rate + cfg.planted_gain * planted_d.at(ym).value_or(0.0);
            const int64_t n = std::poisson_distribution<int64_t>(std::max(lambda, 0.0))(rng);
            std::uniform_int_distribution<int> pick_day(1, days_in_month(ym.year, ym.month));
            for (int64_t k = 0; k < n; ++k) {
                OutageRecord rec;
                rec.event_id = "SYN" + std::to_string(next_id++);
                rec.begin_date = Date{std::chrono::year(ym.year), std::chrono::month(unsigned(ym.month)),
                                      std::chrono::day(unsigned(pick_day(rng)))};
                rec.state = states[pick_state(rng)];
                rec.cause_category = CauseCategory::SevereWeather;
                rec.cause_text = "Severe Weather";
                ds.records.push_back(std::move(rec));
            }
        }
    }
    ds.pon = monthly_pon(ds.records, map, cfg.outage_window);
    return ds;
}

std::vector<ModelSeries> model_ensemble(const EnsembleConfig& cfg, const std::vector<RegionId>& regions) {
    if (cfg.models < 1) throw Error(ErrorCode::Domain, "ensemble needs at least one model");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> spread(0.0, cfg.model_spread), noise(0.0, cfg.noise_sd);
    std::vector<ModelSeries> out;
    for (Scenario sc : {Scenario::SSP2_45, Scenario::SSP5_85}) {
        const double trend = sc == Scenario::SSP2_45 ? cfg.ssp245_trend : cfg.ssp585_trend;
        for (int m = 0; m < cfg.models; ++m) {
            ModelSeries ms;
            char name[16];
            std::snprintf(name, sizeof name, "MODEL%02d", m + 1);
            ms.model = name;
            ms.scenario = sc;
            const double offset = spread(rng);
            for (size_t ri = 0; ri < regions.size(); ++ri) {
                const double level = cfg.start_level * (1.0 + 0.05 * double(ri)) + offset;
                std::vector<double> v;
                for (int y = cfg.first_year; y <= cfg.last_year; ++y)
                    for (int mo = 1; mo <= 12; ++mo)
                        v.push_back(std::max(0.0, level + trend * (y - cfg.first_year) + noise(rng)));
                ms.heatwave_frequency.emplace(regions[ri], MonthlyTimeSeries({cfg.first_year, 1}, std::move(v)));
            }
            out.push_back(std::move(ms));
        }
    }
    return out;
}

std::string model_frequency_csv(const ModelSeries& m) {
    SeriesTable t;
    for (const auto& [r, s] : m.heatwave_frequency) t.emplace(std::string(region_code(r)), s);
    std::ostringstream os;
    write_series_table(os, t);
    return os.str();
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const ChainConfig& chain,
                                    const EnsembleConfig& ensemble) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "indices");
    fs::create_directories(dir / "models");
    auto write_text = [](const fs::path& p, const std::string& s) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
        f << s;
    };

    const ChainDataset ds = planted_chain(chain);
    {
        std::ostringstream os;
        write_outage_records(os, ds.records);
        write_text(dir / "outages.csv", os.str());
    }
    nlohmann::ordered_json indices = nlohmann::ordered_json::object();
    std::mt19937_64 rng(chain.seed ^ 0x5eedULL);
    std::normal_distribution<double> jitter(0.0, 0.2);
    for (IndexKind k : kAllIndices) {
        MonthlyTimeSeries s = ds.index;
        const double sign = k == IndexKind::SOI ? -1.0 : 1.0;
        if (k != IndexKind::MEI)
            for (double& v : s.values) v = sign * v + jitter(rng);
        std::ostringstream os;
        write_series_csv(os, s, false);
        const std::string rel = "indices/" + std::string(index_name(k)) + ".csv";
        write_text(dir / rel, os.str());
        indices[std::string(index_name(k))] = rel;
    }
    save_grid(dir / "t2m.grd", ds.t2m);
    save_grid(dir / "precip.grd", ds.precip);

    std::vector<RegionId> regions(std::begin(kAllRegions), std::end(kAllRegions));
    nlohmann::ordered_json models = nlohmann::ordered_json::array();
    for (const auto& m : model_ensemble(ensemble, regions)) {
        const std::string rel = "models/" + m.model + "_" + std::string(scenario_name(m.scenario)) + ".csv";
        write_text(dir / rel, model_frequency_csv(m));
        models.push_back({{"model", m.model}, {"scenario", scenario_name(m.scenario)}, {"frequency", rel}});
    }

    nlohmann::ordered_json cfg;
    cfg["inputs"] = {{"outages", "outages.csv"},
                     {"indices", indices},
                     {"t2m", "t2m.grd"},
                     {"precip", "precip.grd"},
                     {"models", models}};
    cfg["window"] = {chain.outage_window.first.to_string(), chain.outage_window.last.to_string()};
    cfg["climatology"] = {chain.first_year, chain.first_year + chain.years - 1};
    cfg["seed"] = chain.seed;
    const fs::path path = dir / "config.json";
    write_text(path, cfg.dump(2) + "\n");
    return path;
}

}  // namespace ensopon::synth
