#include "ensopon/region_map.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "ensopon/csv.hpp"
#include "ensopon/error.hpp"
#include "regions_default.inc"

namespace ensopon {

namespace {

constexpr std::array<std::string_view, 12> kRegionCodes = {"NW", "W",  "NR", "SW",  "S1",  "S2",
                                                           "TE", "UM", "OV", "SE1", "SE2", "NE"};

constexpr std::array<std::string_view, 48> kStates = {
    "AL", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "ID", "IL", "IN", "IA", "KS", "KY", "LA",
    "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND",
    "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY"};

struct StateName { std::string_view name, code; };
constexpr StateName kStateNames[] = {
    {"alabama", "AL"}, {"alaska", "AK"}, {"arizona", "AZ"}, {"arkansas", "AR"}, {"california", "CA"},
    {"colorado", "CO"}, {"connecticut", "CT"}, {"delaware", "DE"}, {"florida", "FL"}, {"georgia", "GA"},
    {"hawaii", "HI"}, {"idaho", "ID"}, {"illinois", "IL"}, {"indiana", "IN"}, {"iowa", "IA"},
    {"kansas", "KS"}, {"kentucky", "KY"}, {"louisiana", "LA"}, {"maine", "ME"}, {"maryland", "MD"},
    {"massachusetts", "MA"}, {"michigan", "MI"}, {"minnesota", "MN"}, {"mississippi", "MS"},
    {"missouri", "MO"}, {"montana", "MT"}, {"nebraska", "NE"}, {"nevada", "NV"}, {"newhampshire", "NH"},
    {"newjersey", "NJ"}, {"newmexico", "NM"}, {"newyork", "NY"}, {"northcarolina", "NC"},
    {"northdakota", "ND"}, {"ohio", "OH"}, {"oklahoma", "OK"}, {"oregon", "OR"}, {"pennsylvania", "PA"},
    {"rhodeisland", "RI"}, {"southcarolina", "SC"}, {"southdakota", "SD"}, {"tennessee", "TN"},
    {"texas", "TX"}, {"utah", "UT"}, {"vermont", "VT"}, {"virginia", "VA"}, {"washington", "WA"},
    {"westvirginia", "WV"}, {"wisconsin", "WI"}, {"wyoming", "WY"}};

// --- structured-text values -------------------------------------------------

struct Value;
using List = std::vector<Value>;
struct Value {
    std::variant<double, std::string, List> v;
};

class ValueParser {
public:
    ValueParser(std::string_view text, int line) : s_(text), line_(line) {}

    Value parse() {
        Value v = value();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::Schema, "region map line " + std::to_string(line_) + ": " + msg);
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    Value value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        char c = s_[pos_];
        if (c == '[') {
            ++pos_;
            List items;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
                return {items};
            }
            while (true) {
                items.push_back(value());
                skip_ws();
                if (pos_ >= s_.size()) fail("unterminated list");
                if (s_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                    if (pos_ < s_.size() && s_[pos_] == ']') {  // trailing comma
                        ++pos_;
                        break;
                    }
                    continue;
                }
                if (s_[pos_] == ']') {
                    ++pos_;
                    break;
                }
                fail("expected ',' or ']'");
            }
            return {items};
        }
        if (c == '"' || c == '\'') {
            size_t end = s_.find(c, pos_ + 1);
            if (end == std::string_view::npos) fail("unterminated string");
            std::string str(s_.substr(pos_ + 1, end - pos_ - 1));
            pos_ = end + 1;
            return {str};
        }
        size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
               !std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        auto tok = s_.substr(start, pos_ - start);
        auto num = csv::parse_double(tok);
        if (!num) fail("bad token '" + std::string(tok) + "'");
        return {*num};
    }

    std::string_view s_;
    size_t pos_ = 0;
    int line_;
};

std::string strip_comment(std::string_view line) {
    std::string out;
    char quote = 0;
    for (char c : line) {
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            break;
        }
        out.push_back(c);
    }
    return out;
}

int bracket_balance(std::string_view s) {
    int depth = 0;
    char quote = 0;
    for (char c : s) {
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

BoundingBox to_box(const List& items, int line) {
    if (items.size() != 4)
        throw Error(ErrorCode::Schema, "region map line " + std::to_string(line) + ": bbox needs 4 numbers");
    double v[4];
    for (int i = 0; i < 4; ++i) {
        auto* d = std::get_if<double>(&items[size_t(i)].v);
        if (!d) throw Error(ErrorCode::Schema, "region map line " + std::to_string(line) + ": bbox entries must be numbers");
        v[i] = *d;
    }
    BoundingBox b{v[0], v[1], wrap_longitude(v[2]), wrap_longitude(v[3])};
    if (v[3] == 180.0) b.lon_max = 180.0;
    if (!(b.lat_min < b.lat_max) || !(b.lon_min < b.lon_max))
        throw Error(ErrorCode::Schema, "region map line " + std::to_string(line) + ": empty bbox");
    return b;
}

}  // namespace

std::string_view region_code(RegionId id) { return kRegionCodes[size_t(id)]; }

std::optional<RegionId> parse_region(std::string_view code) {
    code = csv::trim(code);
    for (size_t i = 0; i < kRegionCodes.size(); ++i) {
        auto a = kRegionCodes[i];
        if (a.size() == code.size() &&
            std::equal(a.begin(), a.end(), code.begin(), [](char x, char y) { return x == std::toupper(static_cast<unsigned char>(y)); }))
            return RegionId(i);
    }
    return std::nullopt;
}

const std::array<std::string_view, 48>& continental_states() { return kStates; }

bool is_continental_state(std::string_view code) {
    return std::find(kStates.begin(), kStates.end(), code) != kStates.end();
}

std::optional<std::string> normalize_state(std::string_view text) {
    text = csv::trim(text);
    if (text.size() == 2) {
        std::string up{char(std::toupper(static_cast<unsigned char>(text[0]))),
                       char(std::toupper(static_cast<unsigned char>(text[1])))};
        if (is_continental_state(up) || up == "AK" || up == "HI") return up;
        return std::nullopt;
    }
    auto key = csv::normalize_name(text);
    for (const auto& s : kStateNames)
        if (s.name == key) return std::string(s.code);
    return std::nullopt;
}

double wrap_longitude(double lon) {
    double w = std::fmod(lon + 180.0, 360.0);
    if (w < 0) w += 360.0;
    return w - 180.0;
}

bool BoundingBox::contains(double lat, double lon) const {
    lon = wrap_longitude(lon);
    return lat >= lat_min && lat < lat_max && lon >= lon_min && lon < lon_max;
}

bool BoundingBox::overlaps(const BoundingBox& o) const {
    return lat_min < o.lat_max && o.lat_min < lat_max && lon_min < o.lon_max && o.lon_min < lon_max;
}

RegionMap::RegionMap(std::array<RegionInfo, 12> regions) : regions_(std::move(regions)) {
    for (const auto& r : regions_)
        for (const auto& s : r.states) state_region_[s] = r.id;
}

RegionId RegionMap::region_of_state(std::string_view state) const {
    auto it = state_region_.find(std::string(state));
    if (it == state_region_.end()) throw Error(ErrorCode::Region, "state '" + std::string(state) + "' is not in the region map");
    return it->second;
}

std::optional<RegionId> RegionMap::region_of_point(double lat, double lon) const {
    for (const auto& r : regions_)
        for (const auto& b : r.boxes)
            if (b.contains(lat, lon)) return r.id;
    return std::nullopt;
}

std::vector<std::optional<RegionId>> RegionMap::assign_cells(const GridGeometry& g) const {
    std::vector<std::optional<RegionId>> out(size_t(g.cells()));
    for (int64_t i = 0; i < g.nlat; ++i)
        for (int64_t j = 0; j < g.nlon; ++j) out[size_t(i * g.nlon + j)] = region_of_point(g.lat(i), g.lon(j));
    return out;
}

std::vector<int64_t> RegionMap::cells_of(const GridGeometry& g, RegionId id) const {
    std::vector<int64_t> out;
    auto assigned = assign_cells(g);
    for (size_t c = 0; c < assigned.size(); ++c)
        if (assigned[c] == id) out.push_back(int64_t(c));
    return out;
}

std::vector<BoxOverlap> RegionMap::overlaps() const {
    std::vector<BoxOverlap> out;
    for (size_t a = 0; a < regions_.size(); ++a)
        for (size_t b = a + 1; b < regions_.size(); ++b)
            for (const auto& ba : regions_[a].boxes)
                for (const auto& bb : regions_[b].boxes)
                    if (ba.overlaps(bb)) out.push_back({regions_[a].id, regions_[b].id, ba, bb});
    return out;
}

std::string RegionMap::to_config() const {
    std::ostringstream out;
    for (const auto& r : regions_) {
        auto code = region_code(r.id);
        out << "regions." << code << ".name = \"" << r.name << "\"\n";
        out << "regions." << code << ".states = [";
        for (size_t i = 0; i < r.states.size(); ++i) out << (i ? ", " : "") << '"' << r.states[i] << '"';
        out << "]\n";
        for (const auto& b : r.boxes)
            out << "regions." << code << ".bbox = [" << csv::format_double(b.lat_min) << ", "
                << csv::format_double(b.lat_max) << ", " << csv::format_double(b.lon_min) << ", "
                << csv::format_double(b.lon_max) << "]\n";
    }
    return out.str();
}

RegionMap load_region_map(std::string_view config) {
    std::array<RegionInfo, 12> regions;
    std::array<bool, 12> seen{};
    for (size_t i = 0; i < 12; ++i) regions[i].id = RegionId(i);
    std::map<std::string, RegionId> assigned;

    std::istringstream in{std::string(config)};
    std::string raw;
    int lineno = 0;
    std::string pending;
    int pending_line = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = strip_comment(raw);
        if (!pending.empty()) {
            pending += ' ' + line;
            if (bracket_balance(pending) > 0) continue;
            line = std::move(pending);
            pending.clear();
        } else {
            if (csv::trim(line).empty()) continue;
            if (bracket_balance(line) > 0) {
                pending = line;
                pending_line = lineno;
                continue;
            }
            pending_line = lineno;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::Schema, "region map line " + std::to_string(pending_line) + ": expected key = value");
        std::string key(csv::trim(std::string_view(line).substr(0, eq)));
        Value value = ValueParser(std::string_view(line).substr(eq + 1), pending_line).parse();

        // regions.<id>.<field>
        auto d1 = key.find('.');
        auto d2 = key.find('.', d1 == std::string::npos ? 0 : d1 + 1);
        if (d1 == std::string::npos || d2 == std::string::npos || key.substr(0, d1) != "regions")
            throw Error(ErrorCode::Schema, "region map line " + std::to_string(pending_line) + ": unknown key '" + key + "'");
        std::string id_text = key.substr(d1 + 1, d2 - d1 - 1);
        std::string field = key.substr(d2 + 1);
        auto id = parse_region(id_text);
        if (!id) throw Error(ErrorCode::Region, "unknown region id '" + id_text + "'");
        auto& info = regions[size_t(*id)];
        seen[size_t(*id)] = true;

        if (field == "name") {
            auto* s = std::get_if<std::string>(&value.v);
            if (!s) throw Error(ErrorCode::Schema, "region name must be a string");
            info.name = *s;
        } else if (field == "states") {
            auto* list = std::get_if<List>(&value.v);
            if (!list) throw Error(ErrorCode::Schema, "region states must be a list");
            for (const auto& item : *list) {
                auto* s = std::get_if<std::string>(&item.v);
                if (!s) throw Error(ErrorCode::Schema, "state codes must be strings");
                auto code = normalize_state(*s);
                if (!code || !is_continental_state(*code))
                    throw Error(ErrorCode::Region, "'" + *s + "' is not a continental state");
                auto [it, inserted] = assigned.emplace(*code, *id);
                if (!inserted)
                    throw Error(ErrorCode::Region, "state " + *code + " assigned to both " +
                                                       std::string(region_code(it->second)) + " and " + id_text);
                info.states.push_back(*code);
            }
        } else if (field == "bbox") {
            auto* list = std::get_if<List>(&value.v);
            if (!list || list->empty()) throw Error(ErrorCode::Schema, "bbox must be a non-empty list");
            if (std::holds_alternative<List>(list->front().v)) {
                for (const auto& box : *list) {
                    auto* inner = std::get_if<List>(&box.v);
                    if (!inner) throw Error(ErrorCode::Schema, "mixed bbox list");
                    info.boxes.push_back(to_box(*inner, pending_line));
                }
            } else {
                info.boxes.push_back(to_box(*list, pending_line));
            }
        } else {
            throw Error(ErrorCode::Schema, "unknown region field '" + field + "'");
        }
    }
    if (!pending.empty()) throw Error(ErrorCode::Schema, "region map ends inside a list");

    for (size_t i = 0; i < 12; ++i) {
        if (!seen[i]) throw Error(ErrorCode::Region, "region " + std::string(kRegionCodes[i]) + " is not defined");
        if (regions[i].name.empty()) regions[i].name = std::string(kRegionCodes[i]);
    }
    std::vector<std::string> missing;
    for (auto s : kStates)
        if (!assigned.count(std::string(s))) missing.emplace_back(s);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error(ErrorCode::Region, "region map is incomplete; unassigned states: " + list);
    }
    return RegionMap(std::move(regions));
}

RegionMap load_region_map_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_region_map(ss.str());
}

std::string_view default_region_map_text() { return kDefaultRegionMapText; }

const RegionMap& default_region_map() {
    static const RegionMap map = load_region_map(kDefaultRegionMapText);
    return map;
}

}  // namespace ensopon
