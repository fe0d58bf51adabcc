#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/calendar.hpp"

namespace ensopon {

enum class Variable { T2m, Precip };

std::string_view variable_name(Variable v);
Variable parse_variable(std::string_view name);

/// CPC convention for missing values.
inline constexpr float kDefaultMissingSentinel = -9.96921e36f;

/// Regular lat/lon grid. Cell (i, j) is centred at (lat0 + i*dlat, lon0 + j*dlon).
struct GridGeometry {
    double lat0 = 0, dlat = 0.5;
    double lon0 = 0, dlon = 0.5;
    int64_t nlat = 0, nlon = 0;

    int64_t cells() const { return nlat * nlon; }
    double lat(int64_t i) const { return lat0 + double(i) * dlat; }
    double lon(int64_t j) const { return lon0 + double(j) * dlon; }
    bool operator==(const GridGeometry&) const = default;
};

/// Daily gridded field, time-major then lat then lon. Missing entries are NaN.
struct DailyGridField {
    Variable variable = Variable::T2m;
    GridGeometry grid;
    int64_t t0 = 0;  // epoch day of the first time step
    int64_t ntime = 0;
    float missing_sentinel = kDefaultMissingSentinel;
    std::vector<float> values;

    float at(int64_t t, int64_t cell) const { return values[size_t(t * grid.cells() + cell)]; }
    float& at(int64_t t, int64_t cell) { return values[size_t(t * grid.cells() + cell)]; }
    Date date(int64_t t) const { return from_epoch_day(t0 + t); }

    /// Per-cell validity: true when at least one day is present.
    std::vector<bool> cell_has_data() const;
};

/// Data-quality findings gathered while loading a field.
struct GridDiagnostics {
    int64_t mixed_validity_cells = 0;   // valid on some days, missing on others
    int64_t missing_cells = 0;          // missing on every day
    bool non_reference_resolution = false;  // dlat/dlon != 0.5
    std::vector<std::string> warnings;
};

GridDiagnostics diagnose(const DailyGridField& field);

/// Monthly-resolution gridded counts (GRID1 "monthly variant": t0 is the
/// epoch day of the first month's first day and each step is one month).
struct MonthlyGridField {
    GridGeometry grid;
    YearMonth start{2000, 1};
    int64_t nmonths = 0;
    std::vector<float> values;       // month-major, NaN for invalid cells
    std::vector<bool> cell_valid;

    float at(int64_t m, int64_t cell) const { return values[size_t(m * grid.cells() + cell)]; }
    float& at(int64_t m, int64_t cell) { return values[size_t(m * grid.cells() + cell)]; }
};

/// GRID1: "GRD1", then little-endian f64 lat0, dlat, lon0, dlon; i64 nlat,
/// nlon, ntime; i64 t0 (epoch day); f32 missing sentinel; f32 payload.
void save_grid(const std::filesystem::path& path, const DailyGridField& field);
DailyGridField load_grid(const std::filesystem::path& path, Variable variable = Variable::T2m);
std::string encode_grid(const DailyGridField& field);
DailyGridField decode_grid(std::string_view bytes, Variable variable = Variable::T2m);

void save_monthly_grid(const std::filesystem::path& path, const MonthlyGridField& field);
MonthlyGridField load_monthly_grid(const std::filesystem::path& path);
std::string encode_monthly_grid(const MonthlyGridField& field);

/// CSV adapter: header `date,lat,lon,value`, one row per cell-day. The grid
/// is inferred from the distinct coordinates; absent cell-days are missing.
DailyGridField load_grid_csv(const std::filesystem::path& path, Variable variable);
DailyGridField parse_grid_csv(std::string_view text, Variable variable);

/// Dispatches on extension (.csv uses the adapter, anything else GRID1).
DailyGridField load_grid_any(const std::filesystem::path& path, Variable variable);

}  // namespace ensopon
