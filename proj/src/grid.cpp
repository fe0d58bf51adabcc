#include "ensopon/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ensopon/csv.hpp"
#include "ensopon/error.hpp"

namespace ensopon {

std::string_view variable_name(Variable v) { return v == Variable::T2m ? "t2m" : "precip"; }

Variable parse_variable(std::string_view name) {
    auto key = csv::normalize_name(name);
    if (key == "t2m" || key == "tmax" || key == "tas" || key == "temperature") return Variable::T2m;
    if (key == "precip" || key == "pr" || key == "precipitation") return Variable::Precip;
    throw Error(ErrorCode::Config, "unknown variable '" + std::string(name) + "'");
}

std::vector<bool> DailyGridField::cell_has_data() const {
    const int64_t nc = grid.cells();
    std::vector<bool> out(size_t(nc), false);
    for (int64_t t = 0; t < ntime; ++t)
        for (int64_t c = 0; c < nc; ++c)
            if (!std::isnan(at(t, c))) out[size_t(c)] = true;
    return out;
}

GridDiagnostics diagnose(const DailyGridField& field) {
    GridDiagnostics d;
    const int64_t nc = field.grid.cells();
    std::vector<int64_t> present(size_t(nc), 0);
    for (int64_t t = 0; t < field.ntime; ++t)
        for (int64_t c = 0; c < nc; ++c)
            if (!std::isnan(field.at(t, c))) ++present[size_t(c)];
    for (int64_t c = 0; c < nc; ++c) {
        if (present[size_t(c)] == 0) ++d.missing_cells;
        else if (present[size_t(c)] != field.ntime) ++d.mixed_validity_cells;
    }
    if (d.mixed_validity_cells)
        d.warnings.push_back(std::to_string(d.mixed_validity_cells) + " cells have mixed validity over time");
    d.non_reference_resolution = std::abs(field.grid.dlat - 0.5) > 1e-9 || std::abs(field.grid.dlon - 0.5) > 1e-9;
    if (d.non_reference_resolution) {
        std::ostringstream ss;
        ss << "grid resolution " << field.grid.dlat << " x " << field.grid.dlon << " differs from 0.5 x 0.5";
        d.warnings.push_back(ss.str());
    }
    return d;
}

namespace {

constexpr char kMagic[4] = {'G', 'R', 'D', '1'};
constexpr size_t kHeaderBytes = 4 + 4 * 8 + 3 * 8 + 8 + 4;

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, size_t& pos) {
    char buf[sizeof(T)];
    std::memcpy(buf, bytes.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

struct RawGrid {
    GridGeometry grid;
    int64_t ntime = 0;
    int64_t t0 = 0;
    float sentinel = kDefaultMissingSentinel;
    std::vector<float> values;  // sentinel already mapped to NaN
};

std::string encode_raw(const GridGeometry& g, int64_t ntime, int64_t t0, float sentinel,
                       const std::vector<float>& values) {
    if (int64_t(values.size()) != g.cells() * ntime)
        throw Error(ErrorCode::Size, "grid payload does not match nlat*nlon*ntime");
    std::string out;
    out.reserve(kHeaderBytes + values.size() * 4);
    out.append(kMagic, 4);
    put(out, g.lat0);
    put(out, g.dlat);
    put(out, g.lon0);
    put(out, g.dlon);
    put(out, g.nlat);
    put(out, g.nlon);
    put(out, ntime);
    put(out, t0);
    put(out, sentinel);
    for (float v : values) put(out, std::isnan(v) ? sentinel : v);
    return out;
}

RawGrid decode_raw(std::string_view bytes) {
    if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::Schema, "not a GRID1 file (magic mismatch)");
    RawGrid g;
    size_t pos = 4;
    g.grid.lat0 = get<double>(bytes, pos);
    g.grid.dlat = get<double>(bytes, pos);
    g.grid.lon0 = get<double>(bytes, pos);
    g.grid.dlon = get<double>(bytes, pos);
    g.grid.nlat = get<int64_t>(bytes, pos);
    g.grid.nlon = get<int64_t>(bytes, pos);
    g.ntime = get<int64_t>(bytes, pos);
    g.t0 = get<int64_t>(bytes, pos);
    g.sentinel = get<float>(bytes, pos);
    if (g.grid.nlat < 0 || g.grid.nlon < 0 || g.ntime < 0)
        throw Error(ErrorCode::Size, "negative GRID1 dimension");
    const uint64_t count = uint64_t(g.grid.nlat) * uint64_t(g.grid.nlon) * uint64_t(g.ntime);
    if ((bytes.size() - kHeaderBytes) != count * 4)
        throw Error(ErrorCode::Size, "GRID1 payload holds " + std::to_string((bytes.size() - kHeaderBytes) / 4) +
                                         " values, header declares " + std::to_string(count));
    g.values.resize(size_t(count));
    const bool sentinel_is_nan = std::isnan(g.sentinel);
    for (size_t i = 0; i < count; ++i) {
        float v = get<float>(bytes, pos);
        if (std::isnan(v) && !sentinel_is_nan)
            throw Error(ErrorCode::Schema, "NaN in GRID1 payload at index " + std::to_string(i) +
                                               " (missing values must use the sentinel)");
        g.values[i] = (v == g.sentinel || std::isnan(v)) ? std::nanf("") : v;
    }
    return g;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace

std::string encode_grid(const DailyGridField& f) {
    return encode_raw(f.grid, f.ntime, f.t0, f.missing_sentinel, f.values);
}

DailyGridField decode_grid(std::string_view bytes, Variable variable) {
    RawGrid raw = decode_raw(bytes);
    DailyGridField f;
    f.variable = variable;
    f.grid = raw.grid;
    f.ntime = raw.ntime;
    f.t0 = raw.t0;
    f.missing_sentinel = raw.sentinel;
    f.values = std::move(raw.values);
    return f;
}

void save_grid(const std::filesystem::path& path, const DailyGridField& field) {
    write_bytes(path, encode_grid(field));
}

DailyGridField load_grid(const std::filesystem::path& path, Variable variable) {
    return decode_grid(read_bytes(path), variable);
}

std::string encode_monthly_grid(const MonthlyGridField& f) {
    std::vector<float> vals = f.values;
    const int64_t nc = f.grid.cells();
    for (int64_t m = 0; m < f.nmonths; ++m)
        for (int64_t c = 0; c < nc; ++c)
            if (!f.cell_valid[size_t(c)]) vals[size_t(m * nc + c)] = std::nanf("");
    Date first{std::chrono::year{f.start.year}, std::chrono::month(unsigned(f.start.month)), std::chrono::day{1}};
    return encode_raw(f.grid, f.nmonths, to_epoch_day(first), kDefaultMissingSentinel, vals);
}

void save_monthly_grid(const std::filesystem::path& path, const MonthlyGridField& f) {
    write_bytes(path, encode_monthly_grid(f));
}

MonthlyGridField load_monthly_grid(const std::filesystem::path& path) {
    RawGrid raw = decode_raw(read_bytes(path));
    MonthlyGridField f;
    f.grid = raw.grid;
    f.nmonths = raw.ntime;
    Date first = from_epoch_day(raw.t0);
    if (unsigned(first.day()) != 1) throw Error(ErrorCode::Schema, "monthly GRID1 must start on a month's first day");
    f.start = year_month_of(first);
    f.values = std::move(raw.values);
    const int64_t nc = f.grid.cells();
    f.cell_valid.assign(size_t(nc), false);
    for (int64_t m = 0; m < f.nmonths; ++m)
        for (int64_t c = 0; c < nc; ++c)
            if (!std::isnan(f.values[size_t(m * nc + c)])) f.cell_valid[size_t(c)] = true;
    return f;
}

DailyGridField parse_grid_csv(std::string_view text, Variable variable) {
    auto table = csv::parse(text);
    auto dc = table.column("date"), la = table.column("lat"), lo = table.column("lon"), va = table.column("value");
    if (!dc || !la || !lo || !va) throw Error(ErrorCode::Header, "grid CSV needs date,lat,lon,value columns");
    if (table.rows.empty()) throw Error(ErrorCode::Empty, "grid CSV has no rows");

    struct Row { int64_t day; double lat, lon; float value; };
    std::vector<Row> rows;
    rows.reserve(table.rows.size());
    std::map<double, int> lats, lons;
    int64_t dmin = INT64_MAX, dmax = INT64_MIN;
    for (const auto& r : table.rows) {
        auto d = parse_date(r.at(*dc));
        auto lat = csv::parse_double(r.at(*la));
        auto lon = csv::parse_double(r.at(*lo));
        auto v = csv::parse_double(r.at(*va));
        if (!d || !lat || !lon || !v) throw Error(ErrorCode::Schema, "bad grid CSV row");
        int64_t day = to_epoch_day(*d);
        rows.push_back({day, *lat, *lon, float(*v)});
        lats[*lat] = 0;
        lons[*lon] = 0;
        dmin = std::min(dmin, day);
        dmax = std::max(dmax, day);
    }
    auto spacing = [](const std::map<double, int>& axis) {
        if (axis.size() < 2) return 0.5;
        return std::next(axis.begin())->first - axis.begin()->first;
    };
    DailyGridField f;
    f.variable = variable;
    f.grid.lat0 = lats.begin()->first;
    f.grid.lon0 = lons.begin()->first;
    f.grid.dlat = spacing(lats);
    f.grid.dlon = spacing(lons);
    f.grid.nlat = int64_t(std::llround((lats.rbegin()->first - f.grid.lat0) / f.grid.dlat)) + 1;
    f.grid.nlon = int64_t(std::llround((lons.rbegin()->first - f.grid.lon0) / f.grid.dlon)) + 1;
    f.t0 = dmin;
    f.ntime = dmax - dmin + 1;
    f.values.assign(size_t(f.grid.cells() * f.ntime), std::nanf(""));
    for (const auto& r : rows) {
        double fi = (r.lat - f.grid.lat0) / f.grid.dlat, fj = (r.lon - f.grid.lon0) / f.grid.dlon;
        int64_t i = std::llround(fi), j = std::llround(fj);
        if (std::abs(fi - double(i)) > 1e-6 || std::abs(fj - double(j)) > 1e-6)
            throw Error(ErrorCode::Schema, "grid CSV coordinates are not on a regular grid");
        if (r.value == f.missing_sentinel) continue;
        f.at(r.day - f.t0, i * f.grid.nlon + j) = r.value;
    }
    return f;
}

DailyGridField load_grid_csv(const std::filesystem::path& path, Variable variable) {
    return parse_grid_csv(read_bytes(path), variable);
}

DailyGridField load_grid_any(const std::filesystem::path& path, Variable variable) {
    if (path.extension() == ".csv") return load_grid_csv(path, variable);
    return load_grid(path, variable);
}

}  // namespace ensopon
