#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/grid.hpp"

namespace ensopon {

/// The twelve climate regions (NOAA's nine, with South and Southeast split
/// and Texas separated).
enum class RegionId : uint8_t { NW, W, NR, SW, S1, S2, TE, UM, OV, SE1, SE2, NE };

inline constexpr std::array<RegionId, 12> kAllRegions = {
    RegionId::NW, RegionId::W,  RegionId::NR, RegionId::SW,  RegionId::S1,  RegionId::S2,
    RegionId::TE, RegionId::UM, RegionId::OV, RegionId::SE1, RegionId::SE2, RegionId::NE};

std::string_view region_code(RegionId id);
std::optional<RegionId> parse_region(std::string_view code);

/// The 48 continental state codes.
const std::array<std::string_view, 48>& continental_states();
bool is_continental_state(std::string_view code);

/// Two-letter code for a code or full name ("Texas", "tx"); nullopt otherwise.
/// Alaska and Hawaii resolve to their codes so callers can reject them.
std::optional<std::string> normalize_state(std::string_view text);

/// Half-open box [lat_min, lat_max) x [lon_min, lon_max), longitudes in [-180, 180).
struct BoundingBox {
    double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;

    bool contains(double lat, double lon) const;
    bool overlaps(const BoundingBox& other) const;
};

struct RegionInfo {
    RegionId id = RegionId::NW;
    std::string name;
    std::vector<std::string> states;
    std::vector<BoundingBox> boxes;
};

struct BoxOverlap {
    RegionId a, b;
    BoundingBox first, second;
};

class RegionMap {
public:
    RegionMap() = default;
    explicit RegionMap(std::array<RegionInfo, 12> regions);

    const RegionInfo& info(RegionId id) const { return regions_[size_t(id)]; }
    const std::array<RegionInfo, 12>& regions() const { return regions_; }

    /// Throws E_REGION for states absent from the map.
    RegionId region_of_state(std::string_view state) const;
    bool has_state(std::string_view state) const { return state_region_.count(std::string(state)) > 0; }

    /// First region (canonical order) whose boxes contain the point.
    std::optional<RegionId> region_of_point(double lat, double lon) const;

    /// Region index per grid cell (nullopt for cells outside every region).
    std::vector<std::optional<RegionId>> assign_cells(const GridGeometry& grid) const;
    std::vector<int64_t> cells_of(const GridGeometry& grid, RegionId id) const;

    /// Pairs of boxes from different regions that overlap.
    std::vector<BoxOverlap> overlaps() const;

    /// Serializes back to the structured-text form accepted by load_region_map.
    std::string to_config() const;

private:
    std::array<RegionInfo, 12> regions_{};
    std::map<std::string, RegionId> state_region_;
};

/// Structured text: `regions.<id>.states = [...]`, `regions.<id>.bbox =
/// [latmin, latmax, lonmin, lonmax]` (repeatable, or a list of boxes),
/// optional `regions.<id>.name = "..."`; `#` starts a comment.
RegionMap load_region_map(std::string_view config);
RegionMap load_region_map_file(const std::filesystem::path& path);

std::string_view default_region_map_text();
const RegionMap& default_region_map();

/// Normalizes a longitude to [-180, 180).
double wrap_longitude(double lon);

}  // namespace ensopon
