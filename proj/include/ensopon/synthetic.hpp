#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ensopon/grid.hpp"
#include "ensopon/ingest.hpp"
#include "ensopon/region_map.hpp"

namespace ensopon::synth {

/// AR(2) oscillator x_t = a1 x_{t-1} + a2 x_{t-2} + sd * e_t, standardized.
struct OscillatorConfig {
    double a1 = 0.75;
    double a2 = -0.35;
    double noise_sd = 1.0;
    int burn_in = 120;
};

MonthlyTimeSeries oscillator(YearMonth start, int64_t months, const OscillatorConfig& cfg, std::mt19937_64& rng);

struct ChainConfig {
    uint64_t seed = 1;
    int first_year = 2000;
    int years = 24;
    int index_lead_months = 12;
    OscillatorConfig oscillator;

    GridGeometry grid{25.0, 2.0, -124.0, 2.0, 13, 29};
    RegionId planted_region = RegionId::OV;
    int lag_months = 3;
    /// Temperature shift per unit of negative index, applied L months later.
    double coupling = 2.5;
    double temperature_sd = 2.0;

    double planted_base_rate = 1.0;   // PON per month before the heatwave term
    double planted_gain = 1.0;        // PON per mean heatwave day in the region
    double background_rate = 1.5;     // PON per month elsewhere
    MonthRange outage_window = kDefaultStudyWindow;
};

struct ChainDataset {
    ChainConfig config;
    MonthlyTimeSeries index;        // raw, starts index_lead_months before first_year
    DailyGridField t2m;
    DailyGridField precip;
    RegionalPon pon;                // raw monthly counts over the outage window
    std::vector<OutageRecord> records;
};

/// ENSO-like oscillator -> lagged heatwave excess in the planted region ->
/// Poisson outage counts. Elsewhere temperatures and counts are pure noise.
ChainDataset planted_chain(const ChainConfig& cfg, const RegionMap& map = default_region_map());

/// i.i.d. daily field (normal temperatures or gamma precipitation).
DailyGridField iid_field(Variable v, const GridGeometry& grid, int first_year, int years, std::mt19937_64& rng);

struct EnsembleConfig {
    uint64_t seed = 7;
    int models = 6;
    int first_year = 2015;
    int last_year = 2100;
    double start_level = 3.0;     // springtime heatwave days per month in 2015
    double ssp245_trend = 0.25;   // days per year
    double ssp585_trend = 0.5;
    double model_spread = 1.0;
    double noise_sd = 1.0;
};

/// Per-region monthly heatwave frequencies for `models` members per SSP scenario.
std::vector<ModelSeries> model_ensemble(const EnsembleConfig& cfg, const std::vector<RegionId>& regions);

/// Wide CSV (`date` + region codes) accepted by parse_model_frequency_csv.
std::string model_frequency_csv(const ModelSeries& m);

/// Writes a complete input set plus a run configuration; returns the config path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const ChainConfig& chain,
                                    const EnsembleConfig& ensemble);

}  // namespace ensopon::synth
