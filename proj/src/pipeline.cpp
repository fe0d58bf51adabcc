#include "ensopon/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ensopon/csv.hpp"
#include "ensopon/error.hpp"
#include "ensopon/parallel.hpp"

namespace ensopon::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Stages

std::string_view stage_name(StageId s) {
    switch (s) {
        case StageId::Ingest: return "ingest";
        case StageId::Extremes: return "extremes";
        case StageId::Correlate: return "correlate";
        case StageId::Composite: return "composite";
        case StageId::Mediate: return "mediate";
        case StageId::Project: return "project";
    }
    return "?";
}

std::vector<StageId> parse_stages(std::string_view name) {
    if (name == "all") return {std::begin(kAllStages), std::end(kAllStages)};
    for (StageId s : kAllStages)
        if (stage_name(s) == name) return {s};
    throw Error(ErrorCode::Config, "unknown stage: " + std::string(name));
}

std::vector<StageId> stage_dependencies(StageId s) {
    switch (s) {
        case StageId::Ingest: return {};
        case StageId::Extremes: return {StageId::Ingest};
        case StageId::Correlate: return {StageId::Ingest, StageId::Extremes};
        case StageId::Composite: return {StageId::Ingest};
        case StageId::Mediate: return {StageId::Ingest, StageId::Extremes};
        case StageId::Project: return {StageId::Ingest, StageId::Extremes};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Hashing

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::Io, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

namespace {

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::Path, "cannot open " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_bytes(const fs::path& p, std::string_view bytes) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".part";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        f.write(bytes.data(), std::streamsize(bytes.size()));
        if (!f) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
    }
    fs::rename(tmp, p);
}

}  // namespace

std::string sha256_file(const fs::path& path) { return sha256_hex(read_bytes(path)); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw Error(ErrorCode::Config, std::string(where) + " must be an object");
    for (const auto& [k, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw Error(ErrorCode::Config, "unknown key '" + k + "' in " + std::string(where));
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("bad value for '") + key + "': " + e.what());
    }
}

std::pair<int, int> get_pair(const json& j, const char* key, std::pair<int, int> fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw Error(ErrorCode::Config, std::string("'") + key + "' must be a two-integer list");
    return {v[0].get<int>(), v[1].get<int>()};
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path q(p);
    return q.is_absolute() || base.empty() ? q : (base / q).lexically_normal();
}

std::string display_path(const fs::path& p, const fs::path& base) {
    if (p.empty()) return "";
    if (!base.empty()) {
        auto rel = p.lexically_relative(base);
        if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    }
    return p.generic_string();
}

CorrelationSettings parse_cc(const json& j, CorrelationSettings s, std::string_view where) {
    check_keys(j, where, {"lags", "mode", "normalization", "min_samples", "significance", "permutations"});
    auto [lo, hi] = get_pair(j, "lags", {s.k_min, s.k_max});
    s.k_min = lo;
    s.k_max = hi;
    if (s.k_min > s.k_max) throw Error(ErrorCode::Config, std::string(where) + ": empty lag range");
    if (j.contains("mode")) s.mode = parse_cc_mode(get<std::string>(j, "mode", ""));
    if (j.contains("normalization")) s.norm = parse_cc_normalization(get<std::string>(j, "normalization", ""));
    s.min_samples = get<int64_t>(j, "min_samples", s.min_samples);
    if (j.contains("significance")) s.method = parse_significance_method(get<std::string>(j, "significance", ""));
    s.permutations = get<int>(j, "permutations", s.permutations);
    if (s.permutations < 1) throw Error(ErrorCode::Config, std::string(where) + ": permutations must be >= 1");
    return s;
}

ojson echo_cc(const CorrelationSettings& s) {
    return ojson{{"lags", {s.k_min, s.k_max}},
                 {"mode", cc_mode_name(s.mode)},
                 {"normalization", cc_normalization_name(s.norm)},
                 {"min_samples", s.min_samples},
                 {"significance", significance_method_name(s.method)},
                 {"permutations", s.permutations}};
}

std::string_view aggregation_name(RegionAggregation a) {
    switch (a) {
        case RegionAggregation::Mean: return "mean";
        case RegionAggregation::AreaWeighted: return "area_weighted";
        case RegionAggregation::Max: return "max";
    }
    return "?";
}

RegionAggregation parse_aggregation(std::string_view s) {
    if (s == "mean") return RegionAggregation::Mean;
    if (s == "area_weighted") return RegionAggregation::AreaWeighted;
    if (s == "max") return RegionAggregation::Max;
    throw Error(ErrorCode::Config, "unknown aggregation: " + std::string(s));
}

}  // namespace

RunConfig parse_config(const json& j, const fs::path& base) {
    check_keys(j, "config", {"inputs", "output", "window", "climatology", "seed", "alpha", "jobs",
                             "sparse_threshold", "extremes", "analysis", "projection"});
    RunConfig c;
    if (!j.contains("inputs")) throw Error(ErrorCode::Config, "config lacks 'inputs'");
    const json& in = j.at("inputs");
    check_keys(in, "inputs", {"outages", "indices", "t2m", "precip", "regions", "models"});
    if (!in.contains("outages")) throw Error(ErrorCode::Config, "inputs lack 'outages'");
    c.outages = resolve(base, get<std::string>(in, "outages", ""));
    if (!in.contains("indices") || !in.at("indices").is_object())
        throw Error(ErrorCode::Config, "inputs lack an 'indices' object");
    for (const auto& [k, v] : in.at("indices").items()) {
        if (!v.is_string()) throw Error(ErrorCode::Config, "index path for " + k + " must be a string");
        c.indices[parse_index_kind(k)] = resolve(base, v.get<std::string>());
    }
    if (in.contains("t2m")) c.t2m = resolve(base, get<std::string>(in, "t2m", ""));
    if (in.contains("precip")) c.precip = resolve(base, get<std::string>(in, "precip", ""));
    if (in.contains("regions") && !in.at("regions").is_null())
        c.regions = resolve(base, get<std::string>(in, "regions", ""));
    if (in.contains("models")) {
        if (!in.at("models").is_array()) throw Error(ErrorCode::Config, "'models' must be a list");
        for (const auto& m : in.at("models")) {
            check_keys(m, "model entry", {"model", "scenario", "frequency", "t2m", "historical_t2m"});
            ModelEntry e;
            e.model = get<std::string>(m, "model", "");
            if (e.model.empty()) throw Error(ErrorCode::Config, "model entry without a name");
            e.scenario = parse_scenario(get<std::string>(m, "scenario", ""));
            if (m.contains("frequency")) e.frequency = resolve(base, get<std::string>(m, "frequency", ""));
            if (m.contains("t2m")) e.t2m = resolve(base, get<std::string>(m, "t2m", ""));
            if (m.contains("historical_t2m")) e.historical_t2m = resolve(base, get<std::string>(m, "historical_t2m", ""));
            if (e.frequency.empty() == e.t2m.empty())
                throw Error(ErrorCode::Config, "model " + e.model + " needs exactly one of 'frequency' or 't2m'");
            c.models.push_back(std::move(e));
        }
    }
    c.out = resolve(base, get<std::string>(j, "output", "out"));
    if (j.contains("window")) {
        const auto& w = j.at("window");
        if (!w.is_array() || w.size() != 2) throw Error(ErrorCode::Config, "'window' must be [first, last]");
        try {
            c.window = {YearMonth::parse(w[0].get<std::string>()), YearMonth::parse(w[1].get<std::string>())};
        } catch (const json::exception&) {
            throw Error(ErrorCode::Config, "'window' entries must be YYYY-MM strings");
        }
        if (c.window.last < c.window.first) throw Error(ErrorCode::Config, "empty study window");
    }
    auto [c0, c1] = get_pair(j, "climatology", {c.climatology.first, c.climatology.last});
    c.climatology = {c0, c1};
    if (c0 > c1) throw Error(ErrorCode::Config, "empty climatology range");
    c.seed = get<uint64_t>(j, "seed", 0);
    c.alpha = get<double>(j, "alpha", 0.05);
    c.jobs = get<int>(j, "jobs", 1);
    c.sparse_threshold = get<int64_t>(j, "sparse_threshold", 20);

    if (j.contains("extremes")) {
        const json& e = j.at("extremes");
        check_keys(e, "extremes", {"window_half_width", "hot_percentile", "cold_percentile", "precip_percentile",
                                   "precip_wet_days_only", "wet_day_threshold", "aggregation"});
        c.extremes.window_half_width = get<int>(e, "window_half_width", 15);
        c.extremes.hot_percentile = get<double>(e, "hot_percentile", 95);
        c.extremes.cold_percentile = get<double>(e, "cold_percentile", 5);
        c.extremes.precip_percentile = get<double>(e, "precip_percentile", 95);
        c.extremes.precip_wet_days_only = get<bool>(e, "precip_wet_days_only", false);
        c.extremes.wet_day_threshold = get<double>(e, "wet_day_threshold", 1.0);
        c.aggregation = parse_aggregation(get<std::string>(e, "aggregation", "mean"));
    }
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        check_keys(a, "analysis", {"phase_threshold", "headline_index", "cc", "delay_max_lag", "mediation"});
        c.phase_threshold = get<double>(a, "phase_threshold", 0.5);
        if (a.contains("headline_index")) {
            check_keys(a.at("headline_index"), "headline_index", {"MAM", "JJA", "SON", "DJF"});
            for (const auto& [k, v] : a.at("headline_index").items())
                c.headline_index[parse_season(k)] = parse_index_kind(v.get<std::string>());
        }
        if (a.contains("cc")) c.cc = parse_cc(a.at("cc"), c.cc, "analysis.cc");
        c.delay_max_lag = get<int>(a, "delay_max_lag", 12);
        if (a.contains("mediation")) {
            const json& m = a.at("mediation");
            check_keys(m, "analysis.mediation", {"target", "index_vs_extreme", "extreme_vs_pon"});
            auto target = get<std::string>(m, "target", "region");
            if (target == "region") c.mediation.target = PonTarget::Region;
            else if (target == "all_us") c.mediation.target = PonTarget::AllUs;
            else throw Error(ErrorCode::Config, "mediation target must be 'region' or 'all_us'");
            if (m.contains("index_vs_extreme"))
                c.mediation.index_vs_extreme = parse_cc(m.at("index_vs_extreme"), c.mediation.index_vs_extreme,
                                                        "analysis.mediation.index_vs_extreme");
            if (m.contains("extreme_vs_pon"))
                c.mediation.extreme_vs_pon =
                    parse_cc(m.at("extreme_vs_pon"), c.mediation.extreme_vs_pon, "analysis.mediation.extreme_vs_pon");
        }
    }
    if (j.contains("projection")) {
        const json& p = j.at("projection");
        check_keys(p, "projection", {"mode", "scenarios"});
        c.projection_mode = parse_projection_mode(get<std::string>(p, "mode", "per_model"));
        if (p.contains("scenarios")) {
            c.scenarios.clear();
            for (const auto& s : p.at("scenarios")) c.scenarios.push_back(parse_scenario(s.get<std::string>()));
        }
    }
    c.cc.alpha = c.mediation.index_vs_extreme.alpha = c.mediation.extreme_vs_pon.alpha = c.alpha;
    return c;
}

RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::Path, "config not found: " + path.string());
    json j;
    try {
        j = json::parse(read_bytes(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c = parse_config(j, fs::absolute(path).parent_path());
    c.source = fs::absolute(path);
    return c;
}

ojson RunConfig::echo() const {
    const fs::path base = source.empty() ? fs::path() : source.parent_path();
    ojson idx = ojson::object();
    for (const auto& [k, p] : indices) idx[std::string(index_name(k))] = display_path(p, base);
    ojson models_j = ojson::array();
    for (const auto& m : models) {
        ojson e{{"model", m.model}, {"scenario", scenario_name(m.scenario)}};
        if (!m.frequency.empty()) e["frequency"] = display_path(m.frequency, base);
        if (!m.t2m.empty()) e["t2m"] = display_path(m.t2m, base);
        if (!m.historical_t2m.empty()) e["historical_t2m"] = display_path(m.historical_t2m, base);
        models_j.push_back(e);
    }
    ojson headline = ojson::object();
    for (const auto& [s, k] : headline_index) headline[std::string(season_name(s))] = index_name(k);
    ojson scen = ojson::array();
    for (Scenario s : scenarios) scen.push_back(scenario_name(s));
    return ojson{
        {"inputs",
         {{"outages", display_path(outages, base)},
          {"indices", idx},
          {"t2m", display_path(t2m, base)},
          {"precip", display_path(precip, base)},
          {"regions", regions.empty() ? ojson() : ojson(display_path(regions, base))},
          {"models", models_j}}},
        {"window", {window.first.to_string(), window.last.to_string()}},
        {"climatology", {climatology.first, climatology.last}},
        {"seed", seed},
        {"alpha", alpha},
        {"sparse_threshold", sparse_threshold},
        {"extremes",
         {{"window_half_width", extremes.window_half_width},
          {"hot_percentile", extremes.hot_percentile},
          {"cold_percentile", extremes.cold_percentile},
          {"precip_percentile", extremes.precip_percentile},
          {"precip_wet_days_only", extremes.precip_wet_days_only},
          {"wet_day_threshold", extremes.wet_day_threshold},
          {"aggregation", aggregation_name(aggregation)}}},
        {"analysis",
         {{"phase_threshold", phase_threshold},
          {"headline_index", headline},
          {"cc", echo_cc(cc)},
          {"delay_max_lag", delay_max_lag},
          {"mediation",
           {{"target", mediation.target == PonTarget::Region ? "region" : "all_us"},
            {"index_vs_extreme", echo_cc(mediation.index_vs_extreme)},
            {"extreme_vs_pon", echo_cc(mediation.extreme_vs_pon)}}}}},
        {"projection", {{"mode", projection_mode_name(projection_mode)}, {"scenarios", scen}}}};
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const {
    return std::none_of(issues.begin(), issues.end(), [](const Issue& i) { return i.is_error(); });
}

std::string ValidationReport::text() const {
    std::ostringstream os;
    for (const auto& i : issues) os << (i.is_error() ? "error " : "warning ") << i.code << ": " << i.message << "\n";
    os << (ok() ? "valid" : "invalid") << "\n";
    return os.str();
}

namespace {

RegionMap region_map_for(const RunConfig& cfg) {
    return cfg.regions.empty() ? default_region_map() : load_region_map_file(cfg.regions);
}

ExtremeConfig extreme_config_for(const RunConfig& cfg) {
    ExtremeConfig e = cfg.extremes;
    if (!e.pool_years) e.pool_years = cfg.climatology;
    e.jobs = cfg.jobs;
    return e;
}

std::vector<IndexKind> required_indices(const RunConfig& cfg) {
    std::set<IndexKind> k{IndexKind::MEI};
    for (const auto& [_, v] : cfg.headline_index) k.insert(v);
    return {k.begin(), k.end()};
}

void check_grid_coverage(const DailyGridField& f, const RunConfig& cfg, std::string_view what) {
    if (f.ntime == 0) throw Error(ErrorCode::Coverage, std::string(what) + " has no time steps");
    const YearMonth first = year_month_of(f.date(0)), last = year_month_of(f.date(f.ntime - 1));
    if (first > cfg.window.first || last < cfg.window.last)
        throw Error(ErrorCode::Coverage, std::string(what) + " spans " + first.to_string() + ".." + last.to_string() +
                                             ", study window is " + cfg.window.first.to_string() + ".." +
                                             cfg.window.last.to_string());
}

}  // namespace

ValidationReport validate(const RunConfig& cfg) {
    ValidationReport rep;
    auto add = [&](std::string code, std::string msg) { rep.issues.push_back({std::move(code), std::move(msg)}); };
    auto guard = [&](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            add(std::string(error_code_name(e.code())), e.what());
        } catch (const std::exception& e) {
            add("E_IO", e.what());
        }
    };

    if (!(cfg.alpha > 0 && cfg.alpha < 1)) add("E_CONFIG", "alpha must lie in (0, 1)");
    if (cfg.jobs < 1) add("E_CONFIG", "jobs must be >= 1");
    if (cfg.sparse_threshold < 0) add("E_CONFIG", "sparse_threshold must be >= 0");
    guard([&] { extreme_config_for(cfg).validate(); });

    auto need = [&](const fs::path& p, std::string_view what) {
        if (p.empty()) {
            add("E_CONFIG", std::string(what) + " path not configured");
            return false;
        }
        if (!fs::exists(p)) {
            add("E_PATH", std::string(what) + " not found: " + p.string());
            return false;
        }
        return true;
    };

    std::optional<RegionMap> map;
    if (cfg.regions.empty() || need(cfg.regions, "region map"))
        guard([&] {
            map = region_map_for(cfg);
            for (const auto& o : map->overlaps())
                add("W_OVERLAP", std::string(region_code(o.a)) + " and " + std::string(region_code(o.b)) +
                                     " boxes overlap; cells go to " + std::string(region_code(o.a)));
        });

    if (need(cfg.outages, "outage table") && map)
        guard([&] {
            OutageParseOptions opt;
            opt.window = cfg.window;
            auto res = read_outage_records(cfg.outages, opt);
            for (const auto& r : res.records)
                if (!map->has_state(r.state)) throw Error(ErrorCode::Region, "state " + r.state + " has no region");
        });

    for (IndexKind k : required_indices(cfg))
        if (!cfg.indices.count(k)) add("E_CONFIG", "index " + std::string(index_name(k)) + " not configured");
    for (const auto& [k, p] : cfg.indices)
        if (need(p, std::string(index_name(k)) + " index"))
            guard([&] {
                IndexParseOptions opt;
                opt.window = cfg.window;
                read_enso_index(p, k, opt);
            });

    for (auto [p, v] : {std::pair{cfg.t2m, Variable::T2m}, std::pair{cfg.precip, Variable::Precip}}) {
        const std::string what = std::string(variable_name(v)) + " grid";
        if (!need(p, what)) continue;
        guard([&] {
            DailyGridField f = load_grid_any(p, v);
            check_grid_coverage(f, cfg, what);
            GridDiagnostics d = diagnose(f);
            if (d.non_reference_resolution)
                add("W_GRID_RES", what + " resolution " + csv::format_double(f.grid.dlat) + "x" +
                                      csv::format_double(f.grid.dlon) + " differs from 0.5 degrees");
            if (d.mixed_validity_cells > 0)
                add("W_MIXED_VALIDITY", what + ": " + std::to_string(d.mixed_validity_cells) +
                                            " cells are missing on some days only");
        });
    }

    for (const auto& m : cfg.models) {
        const std::string what = "model " + m.model + " (" + std::string(scenario_name(m.scenario)) + ")";
        if (!m.frequency.empty()) {
            if (!need(m.frequency, what + " frequency table")) continue;
            guard([&] {
                auto ms = parse_model_frequency_csv(read_text_file(m.frequency), m.model, m.scenario);
                if (m.scenario != Scenario::Historical)
                    for (const auto& [r, s] : ms.heatwave_frequency)
                        if (s.start > YearMonth{2015, 3} || s.last() < YearMonth{2100, 5})
                            throw Error(ErrorCode::Coverage, what + " region " + std::string(region_code(r)) +
                                                                 " does not cover the 2015-2100 springs");
            });
        } else {
            need(m.t2m, what + " temperature grid");
            if (!m.historical_t2m.empty()) need(m.historical_t2m, what + " historical temperature grid");
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Artifact plumbing

namespace {

class CsvOut {
public:
    explicit CsvOut(const std::vector<std::string>& header) { csv::write_row(os_, header); }
    void row(const std::vector<std::string>& f) { csv::write_row(os_, f); }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

std::string num(double v) { return csv::format_double(v); }
std::string num(int64_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

struct Sink {
    std::map<std::string, std::string> files;
    void put(const std::string& rel, std::string bytes) { files[rel] = std::move(bytes); }
};

std::string series_table_text(const SeriesTable& t) {
    std::ostringstream os;
    write_series_table(os, t);
    return os.str();
}

std::string series_text(const MonthlyTimeSeries& s) {
    std::ostringstream os;
    write_series_csv(os, s, true);
    return os.str();
}

uint64_t stage_seed(uint64_t seed, StageId s) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (uint64_t(s) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Context {
    const RunConfig& cfg;
    RegionMap map;
    std::vector<std::string> log;

    fs::path path(const std::string& rel) const { return cfg.out / rel; }
    std::string text(const std::string& rel) const {
        const fs::path p = path(rel);
        if (!fs::exists(p)) throw Error(ErrorCode::Dependency, "missing artifact " + rel);
        return read_bytes(p);
    }
    RegionalPon pon(bool preprocessed) const {
        return RegionalPon::from_table(
            read_series_table(text(preprocessed ? "ingest/pon_preprocessed.csv" : "ingest/pon_monthly.csv")));
    }
    MonthlyTimeSeries index(IndexKind k) const {
        return read_series_csv(text("ingest/index_" + std::string(index_name(k)) + "_preprocessed.csv"));
    }
    std::vector<RegionId> eligible() const {
        auto j = json::parse(text("ingest/ingest_summary.json"));
        std::vector<RegionId> out;
        for (const auto& r : j.at("eligible_regions")) out.push_back(*parse_region(r.get<std::string>()));
        return out;
    }
    std::map<RegionId, MonthlyTimeSeries> regional_frequency(ExtremeKind k) const {
        std::map<RegionId, MonthlyTimeSeries> out;
        for (auto& [name, s] :
             read_series_table(text("extremes/regional_" + std::string(extreme_kind_name(k)) + ".csv")))
            out.emplace(*parse_region(name), std::move(s));
        return out;
    }
};

// ---- ingest ----------------------------------------------------------------

void stage_ingest(Context& ctx, Sink& sink) {
    const RunConfig& cfg = ctx.cfg;
    OutageParseOptions opt;
    opt.window = cfg.window;
    auto parsed = read_outage_records(cfg.outages, opt);
    {
        std::ostringstream os;
        write_outage_records(os, parsed.records);
        sink.put("ingest/outages_clean.csv", os.str());
    }
    RegionalPon pon = monthly_pon(parsed.records, ctx.map, cfg.window);
    EligibleRegions elig = exclude_sparse_regions(pon, cfg.sparse_threshold);
    sink.put("ingest/pon_monthly.csv", series_table_text(pon.as_table()));

    RegionalPon pre;
    pre.all_us = preprocess(pon.all_us, cfg.climatology);
    for (const auto& [r, s] : pon.regions) pre.regions[r] = preprocess(s, cfg.climatology);
    sink.put("ingest/pon_preprocessed.csv", series_table_text(pre.as_table()));

    IndexParseOptions iopt;
    iopt.window = cfg.window;
    for (const auto& [k, p] : cfg.indices) {
        auto raw = read_enso_index(p, k, iopt).values;
        const std::string name(index_name(k));
        sink.put("ingest/index_" + name + ".csv", series_text(raw));
        sink.put("ingest/index_" + name + "_preprocessed.csv", series_text(preprocess(raw, cfg.climatology)));
    }

    CsvOut regions({"region", "name", "states", "events", "eligible"});
    for (RegionId r : kAllRegions) {
        const auto& info = ctx.map.info(r);
        std::string states;
        for (const auto& s : info.states) states += (states.empty() ? "" : " ") + s;
        const bool ok = std::find(elig.eligible.begin(), elig.eligible.end(), r) != elig.eligible.end();
        regions.row({std::string(region_code(r)), info.name, states, num(elig.totals[r]), flag(ok)});
    }
    sink.put("fig1a_regions.csv", regions.str());

    ojson summary;
    summary["events"] = parsed.records.size();
    summary["dropped"] = {{"incomplete", parsed.dropped.incomplete},
                          {"bad_date", parsed.dropped.bad_date},
                          {"unknown_state", parsed.dropped.unknown_state},
                          {"non_continental", parsed.dropped.non_continental},
                          {"out_of_window", parsed.dropped.out_of_window},
                          {"not_weather", parsed.dropped.not_weather}};
    ojson el = ojson::array(), ex = ojson::array(), tot = ojson::object();
    for (RegionId r : elig.eligible) el.push_back(region_code(r));
    for (RegionId r : elig.excluded) ex.push_back(region_code(r));
    for (const auto& [r, n] : elig.totals) tot[std::string(region_code(r))] = n;
    summary["eligible_regions"] = el;
    summary["excluded_regions"] = ex;
    summary["region_events"] = tot;
    summary["warnings"] = elig.warnings;
    sink.put("ingest/ingest_summary.json", summary.dump(2) + "\n");
    for (const auto& w : elig.warnings) ctx.log.push_back("ingest: " + w);
}

// ---- extremes --------------------------------------------------------------

void stage_extremes(Context& ctx, Sink& sink) {
    const RunConfig& cfg = ctx.cfg;
    const ExtremeConfig ecfg = extreme_config_for(cfg);
    ojson diag = ojson::object();
    auto emit = [&](const ExtremeFrequencySeries& f) {
        const std::string name(extreme_kind_name(f.kind));
        sink.put("extremes/freq_" + name + ".grd", encode_monthly_grid(f.counts));
        SeriesTable t;
        for (auto& [r, s] : regional_frequencies(f, ctx.map, cfg.aggregation)) t.emplace(std::string(region_code(r)), s);
        sink.put("extremes/regional_" + name + ".csv", series_table_text(t));
    };
    for (auto [path, var] : {std::pair{cfg.t2m, Variable::T2m}, std::pair{cfg.precip, Variable::Precip}}) {
        DailyGridField field = load_grid_any(path, var);
        check_grid_coverage(field, cfg, variable_name(var));
        GridDiagnostics d = diagnose(field);
        int64_t unassigned = 0;
        const auto owner = ctx.map.assign_cells(field.grid);
        const auto has = field.cell_has_data();
        for (size_t c = 0; c < owner.size(); ++c)
            if (has[c] && !owner[c]) ++unassigned;
        diag[std::string(variable_name(var))] = {{"mixed_validity_cells", d.mixed_validity_cells},
                                                 {"missing_cells", d.missing_cells},
                                                 {"cells_outside_regions", unassigned},
                                                 {"non_reference_resolution", d.non_reference_resolution}};
        const ThresholdCalendar thr = build_thresholds(field, ecfg);
        for (ExtremeKind k : kAllExtremeKinds) {
            if (variable_of(k) != var) continue;
            emit(monthly_frequency(classify_days(field, thr, k, cfg.jobs)));
        }
    }
    sink.put("extremes/diagnostics.json", diag.dump(2) + "\n");
}

// ---- correlate -------------------------------------------------------------

std::vector<IntensityProxy> load_proxies(const Context& ctx) {
    std::vector<IntensityProxy> out;
    for (const auto& [k, _] : ctx.cfg.indices) out.push_back(make_proxy(k, ctx.index(k)));
    return out;
}

const IntensityProxy& proxy_of(const std::vector<IntensityProxy>& ps, IndexKind k) {
    for (const auto& p : ps)
        if (p.kind == k) return p;
    throw Error(ErrorCode::Config, "index " + std::string(index_name(k)) + " not configured");
}

std::vector<std::string> cc_fields(const CorrelationResult& r) {
    return {num(r.r), std::to_string(r.lag), num(r.n_samples), num(r.p_value), flag(r.computable)};
}

void stage_correlate(Context& ctx, Sink& sink) {
    const RunConfig& cfg = ctx.cfg;
    const RegionalPon pon = ctx.pon(true);
    const auto eligible = ctx.eligible();
    const auto proxies = load_proxies(ctx);
    const uint64_t seed = stage_seed(cfg.seed, StageId::Correlate);

    CsvOut table({"season", "target", "index", "proxy", "r", "lag", "n", "p", "computable", "significant"});
    CsvOut summary({"season", "index", "significant_regions", "regions", "majority"});
    std::map<Season, CcTable> tables;
    for (Season s : kAllSeasons) {
        CorrelationSettings cs = cfg.cc;
        cs.seed = seed + uint64_t(s);
        tables[s] = region_index_cc_table(proxies, pon, eligible, s, cs);
        for (const auto& c : tables[s].cells) {
            auto f = cc_fields(c.result);
            std::vector<std::string> row{std::string(season_name(s)), c.target, std::string(index_name(c.index)),
                                         c.proxy_label};
            row.insert(row.end(), f.begin(), f.end());
            row.push_back(flag(c.significant));
            table.row(row);
        }
        for (const auto& m : tables[s].summary)
            summary.row({std::string(season_name(s)), std::string(index_name(m.index)),
                         std::to_string(m.significant_regions), std::to_string(m.regions), flag(m.majority)});
    }
    sink.put("fig1c_cc_table.csv", table.str());
    sink.put("fig1c_summary.csv", summary.str());

    const std::pair<Season, std::string> maps[] = {{Season::MAM, "fig2a"}, {Season::JJA, "fig3a"}, {Season::DJF, "fig3e"}};
    for (const auto& [s, fig] : maps) {
        const IndexKind k = cfg.headline_index.at(s);
        CsvOut out({"target", "proxy", "r", "lag", "n", "p", "computable", "significant"});
        for (const auto& c : tables[s].cells) {
            if (c.index != k) continue;
            auto f = cc_fields(c.result);
            std::vector<std::string> row{c.target, c.proxy_label};
            row.insert(row.end(), f.begin(), f.end());
            row.push_back(flag(c.significant));
            out.row(row);
        }
        sink.put(fig + "_region_cc.csv", out.str());
    }

    const std::pair<Season, std::string> curves[] = {{Season::MAM, "fig2c"}, {Season::JJA, "fig3c"}, {Season::DJF, "fig3g"}};
    for (const auto& [s, fig] : curves) {
        CorrelationSettings cs = cfg.cc;
        cs.k_min = -cfg.delay_max_lag;
        cs.k_max = cfg.delay_max_lag;
        cs.seed = seed + 16 + uint64_t(s);
        const auto& proxy = proxy_of(proxies, cfg.headline_index.at(s));
        auto curve = delay_curve(proxy, pon.all_us, {s}, cs);
        CsvOut out({"proxy", "k", "r", "n", "p", "computable", "significant"});
        for (const auto& c : curve.curve) {
            CorrelationSettings any = cs;
            any.mode = CcMode::MaxAbs;
            out.row({proxy.label(), std::to_string(c.lag), num(c.r), num(c.n_samples), num(c.p_value),
                     flag(c.computable), flag(is_significant(c, any))});
        }
        sink.put(fig + "_delay_curve.csv", out.str());
    }
}

// ---- composite -------------------------------------------------------------

void stage_composite(Context& ctx, Sink& sink) {
    const RunConfig& cfg = ctx.cfg;
    const RegionalPon pon = ctx.pon(true);
    const auto eligible = ctx.eligible();
    const MonthlyTimeSeries mei = ctx.index(IndexKind::MEI);
    const PhaseSeries phases = classify_phase(mei, cfg.phase_threshold);

    CsvOut comp({"group", "phase", "n", "mean", "grand_mean", "f", "anova_p", "status", "note"});
    CsvOut hsd({"group", "pair", "mean_difference", "critical_value", "q", "p_adjusted", "significant"});
    const std::vector<std::pair<std::string, std::vector<Season>>> groups{
        {"MAM", {Season::MAM}},
        {"JJA", {Season::JJA}},
        {"SON", {Season::SON}},
        {"DJF", {Season::DJF}},
        {"MAM+JJA+DJF", {Season::MAM, Season::JJA, Season::DJF}}};
    for (const auto& [name, seasons] : groups) {
        const std::string note = name == "SON" ? "autumn: reported without interpretation" : "";
        try {
            CompositeResult r = composite_pon_by_phase(pon.all_us, phases, seasons, cfg.alpha);
            for (Phase p : {Phase::LaNina, Phase::ElNino, Phase::Neutral})
                comp.row({name, std::string(phase_name(p)), num(r.sizes[size_t(p)]), num(r.means[size_t(p)]),
                          num(r.grand_mean), num(r.hsd.anova.f), num(r.hsd.anova.p), "ok", note});
            for (const auto& pr : r.hsd.pairs)
                hsd.row({name, std::string(phase_name(Phase(pr.i))) + "-" + std::string(phase_name(Phase(pr.j))),
                         num(pr.mean_difference), num(pr.critical_value), num(pr.q_statistic), num(pr.p_adjusted),
                         flag(pr.significant)});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Empty && e.code() != ErrorCode::Degenerate) throw;
            comp.row({name, "", "", "", "", "", "", std::string(error_code_name(e.code())), e.what()});
            ctx.log.push_back("composite " + name + ": " + e.what());
        }
    }
    sink.put("fig1b_composites.csv", comp.str());
    sink.put("fig1b_hsd.csv", hsd.str());

    const std::pair<Season, std::string> scatters[] = {{Season::MAM, "fig2b"}, {Season::JJA, "fig3b"}, {Season::DJF, "fig3f"}};
    for (const auto& [s, fig] : scatters) {
        const IndexKind k = cfg.headline_index.at(s);
        const MonthlyTimeSeries idx = ctx.index(k);
        CsvOut pts({"target", "month", "index", "index_value", "pon", "phase"});
        CsvOut means({"target", "phase", "n", "mean_pon", "slope", "slope_p"});
        std::vector<std::pair<std::string, const MonthlyTimeSeries*>> targets{{"US", &pon.all_us}};
        for (RegionId r : eligible) targets.emplace_back(std::string(region_code(r)), &pon.regions.at(r));
        for (const auto& [name, series] : targets) {
            PhaseScatter sc = phase_scatter(idx, *series, phases, s);
            std::array<std::vector<double>, 3> xs, ys;
            for (const auto& p : sc.points) {
                pts.row({name, p.outage_month.to_string(), std::string(index_name(k)), num(p.index_value), num(p.pon),
                         std::string(phase_name(p.phase))});
                xs[size_t(p.phase)].push_back(p.index_value);
                ys[size_t(p.phase)].push_back(p.pon);
            }
            for (Phase p : {Phase::LaNina, Phase::ElNino, Phase::Neutral}) {
                double slope = kNaN, sp = kNaN;
                try {
                    if (xs[size_t(p)].size() >= 3) {
                        auto lm = ols_fit(xs[size_t(p)], ys[size_t(p)]);
                        slope = lm.slope;
                        sp = lm.slope_p;
                    }
                } catch (const Error&) {
                }
                means.row({name, std::string(phase_name(p)), num(sc.phase_sizes[size_t(p)]),
                           num(sc.phase_means[size_t(p)]), num(slope), num(sp)});
            }
        }
        sink.put(fig + "_scatter.csv", pts.str());
        sink.put(fig + "_phase_means.csv", means.str());
    }
}

// ---- mediate ---------------------------------------------------------------

void stage_mediate(Context& ctx, Sink& sink) {
    const RunConfig& cfg = ctx.cfg;
    const RegionalPon pon = ctx.pon(true);
    const auto eligible = ctx.eligible();
    const uint64_t seed = stage_seed(cfg.seed, StageId::Mediate);

    std::map<ExtremeKind, CellSeriesGrid> cells;
    auto cells_of = [&](ExtremeKind k) -> const CellSeriesGrid& {
        auto it = cells.find(k);
        if (it != cells.end()) return it->second;
        ExtremeFrequencySeries f;
        f.kind = k;
        const fs::path p = ctx.path("extremes/freq_" + std::string(extreme_kind_name(k)) + ".grd");
        if (!fs::exists(p)) throw Error(ErrorCode::Dependency, "missing artifact " + p.string());
        f.counts = load_monthly_grid(p);
        return cells.emplace(k, preprocess_cells(f, cfg.climatology, cfg.jobs)).first->second;
    };

    struct Job {
        Season season;
        ExtremeKind kind;
        std::string file;
    };
    const std::vector<Job> jobs{{Season::MAM, ExtremeKind::ColdSnap, "fig2def_mediation_coldsnap.csv"},
                                {Season::MAM, ExtremeKind::Heatwave, "fig2def_mediation_heatwave.csv"},
                                {Season::MAM, ExtremeKind::ExtremePrecip, "fig2def_mediation_precip.csv"},
                                {Season::JJA, ExtremeKind::Heatwave, "fig3d_mediation_heatwave.csv"},
                                {Season::DJF, ExtremeKind::ExtremePrecip, "fig3h_mediation_precip.csv"}};
    CsvOut summary({"artifact", "season", "kind", "proxy", "cells", "flagged", "flag_rate", "unassigned_cells",
                    "ineligible_cells"});
    uint64_t salt = 0;
    for (const auto& job : jobs) {
        const IndexKind k = cfg.headline_index.at(job.season);
        if (!cfg.indices.count(k)) throw Error(ErrorCode::Config, "index " + std::string(index_name(k)) + " not configured");
        const IntensityProxy proxy = make_proxy(k, ctx.index(k));
        MediationSettings ms = cfg.mediation;
        ms.jobs = cfg.jobs;
        ms.index_vs_extreme.seed = seed + 2 * salt;
        ms.extreme_vs_pon.seed = seed + 2 * salt + 1;
        ++salt;
        MediationMap m = mediation_maps(proxy, cells_of(job.kind), job.kind, pon, ctx.map, eligible, {job.season}, ms);
        CsvOut out({"cell", "lat", "lon", "region", "r_index_extreme", "lag_index_extreme", "n_index_extreme",
                    "p_index_extreme", "significant_index_extreme", "r_extreme_pon", "lag_extreme_pon",
                    "n_extreme_pon", "p_extreme_pon", "significant_extreme_pon", "mediation_flag"});
        int64_t flagged = 0;
        for (const auto& c : m.cells) {
            out.row({num(c.cell), num(c.lat), num(c.lon), std::string(region_code(c.region)), num(c.index_vs_extreme.r),
                     std::to_string(c.index_vs_extreme.lag), num(c.index_vs_extreme.n_samples),
                     num(c.index_vs_extreme.p_value), flag(c.index_significant), num(c.extreme_vs_pon.r),
                     std::to_string(c.extreme_vs_pon.lag), num(c.extreme_vs_pon.n_samples),
                     num(c.extreme_vs_pon.p_value), flag(c.pon_significant), flag(c.flag)});
            flagged += c.flag;
        }
        sink.put(job.file, out.str());
        summary.row({job.file, std::string(season_name(job.season)), std::string(extreme_kind_name(job.kind)),
                     proxy.label(), num(int64_t(m.cells.size())), num(flagged), num(m.flag_rate()),
                     num(m.unassigned_cells), num(m.ineligible_cells)});
        if (m.unassigned_cells > 0)
            ctx.log.push_back("mediate " + job.file + ": " + std::to_string(m.unassigned_cells) +
                              " valid cells lie outside every region and were excluded");
    }
    sink.put("mediation_summary.csv", summary.str());
}

// ---- project ---------------------------------------------------------------

DailyGridField concat_fields(DailyGridField a, const DailyGridField& b) {
    if (!(a.grid == b.grid)) throw Error(ErrorCode::Schema, "historical and scenario grids differ");
    if (a.t0 + a.ntime != b.t0) throw Error(ErrorCode::Gap, "scenario grid does not continue the historical grid");
    a.values.insert(a.values.end(), b.values.begin(), b.values.end());
    a.ntime += b.ntime;
    return a;
}

ModelSeries load_model(const Context& ctx, const ModelEntry& e) {
    if (!e.frequency.empty()) return parse_model_frequency_csv(read_text_file(e.frequency), e.model, e.scenario);
    DailyGridField f = load_grid_any(e.t2m, Variable::T2m);
    if (!e.historical_t2m.empty()) f = concat_fields(load_grid_any(e.historical_t2m, Variable::T2m), f);
    ExtremeConfig ecfg = extreme_config_for(ctx.cfg);
    ecfg.jobs = 1;
    auto freq = extreme_frequency(f, ecfg, ExtremeKind::Heatwave);
    ModelSeries m;
    m.model = e.model;
    m.scenario = e.scenario;
    m.heatwave_frequency = regional_frequencies(freq, ctx.map, ctx.cfg.aggregation);
    return m;
}

void stage_project(Context& ctx, Sink& sink) {
    const RunConfig& cfg = ctx.cfg;
    if (cfg.models.empty()) throw Error(ErrorCode::Config, "projection needs at least one model entry");
    const RegionalPon pon = ctx.pon(false);
    const auto eligible = ctx.eligible();
    const auto freq = ctx.regional_frequency(ExtremeKind::Heatwave);

    std::vector<RegionId> regions;
    for (RegionId r : eligible)
        if (freq.count(r)) regions.push_back(r);

    CsvOut hist({"region", "baseline_d", "target_d", "delta_d", "baseline_pon", "target_pon", "delta_pon",
                 "zero_baseline"});
    for (const auto& a : historical_amplification(freq, pon, regions))
        hist.row({std::string(region_code(a.region)), num(a.baseline_d), num(a.target_d), num(a.delta_d),
                  num(a.baseline_pon), num(a.target_pon), num(a.delta_pon), flag(a.zero_baseline)});
    sink.put("fig4ab_historical.csv", hist.str());

    std::map<RegionId, RegionalFit> fits;
    CsvOut fit_csv({"region", "intercept", "slope", "r", "slope_p", "n", "eligible", "note"});
    for (RegionId r : regions) {
        RegionalFit f;
        f.region = r;
        try {
            f = fit_regional_model(r, freq.at(r), pon.regions.at(r), cfg.climatology, cfg.alpha);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Degenerate && e.code() != ErrorCode::Domain) throw;
            f.eligible = false;
            f.note = std::string(error_code_name(e.code())) + ": " + e.what();
        }
        fits[r] = f;
        fit_csv.row({std::string(region_code(r)), num(f.model.intercept), num(f.model.slope), num(f.r),
                     num(f.model.slope_p), num(f.model.n), flag(f.eligible), f.note});
    }
    sink.put("fig4_fits.csv", fit_csv.str());

    std::vector<ModelSeries> models(cfg.models.size());
    parallel_for(int64_t(models.size()), cfg.jobs, [&](int64_t i) { models[size_t(i)] = load_model(ctx, cfg.models[size_t(i)]); });
    ProjectionEnsemble ens = project_ensemble(models, fits, cfg.projection_mode, cfg.scenarios, cfg.jobs);
    for (const auto& l : ens.log) ctx.log.push_back("project: " + l);

    auto observed_rows = [&](CsvOut& out, const std::map<RegionId, AnnualSeries>& obs) {
        for (const auto& [r, s] : obs)
            for (int y = s.first_year; y <= s.last_year(); ++y)
                if (auto v = s.at(y))
                    out.row({"observed", std::string(region_code(r)), std::to_string(y), num(*v), num(*v), num(*v), "1"});
    };
    auto envelope_rows = [&](CsvOut& out, const std::string& sc, const std::string& region, const Envelope& e) {
        for (size_t k = 0; k < e.years.size(); ++k)
            out.row({sc, region, std::to_string(e.years[k]), num(e.mean[k]), num(e.min[k]), num(e.max[k]),
                     std::to_string(e.members[k])});
    };

    CsvOut fenv({"scenario", "region", "year", "mean", "min", "max", "members"});
    std::map<RegionId, AnnualSeries> obs_f, obs_p;
    for (RegionId r : regions) {
        obs_f[r] = seasonal_mean(freq.at(r));
        obs_p[r] = seasonal_mean(pon.regions.at(r));
    }
    observed_rows(fenv, obs_f);
    for (const auto& [sc, per] : ens.frequency)
        for (const auto& [r, e] : per) envelope_rows(fenv, std::string(scenario_name(sc)), std::string(region_code(r)), e);
    for (const auto& [sc, e] : ens.eligible_frequency) envelope_rows(fenv, std::string(scenario_name(sc)), "ELIGIBLE", e);
    sink.put("fig4c_frequency_envelopes.csv", fenv.str());

    CsvOut penv({"scenario", "region", "year", "mean", "min", "max", "members"});
    std::map<RegionId, AnnualSeries> obs_pe;
    for (const auto& [r, f] : fits)
        if (f.eligible) obs_pe[r] = obs_p[r];
    observed_rows(penv, obs_pe);
    for (const auto& [sc, per] : ens.pon)
        for (const auto& [r, e] : per) envelope_rows(penv, std::string(scenario_name(sc)), std::string(region_code(r)), e);
    sink.put("fig4d_pon_envelopes.csv", penv.str());

    CsvOut ratios({"scenario", "period", "region", "baseline_d", "target_d", "delta_d", "baseline_pon", "target_pon",
                   "delta_pon", "zero_baseline"});
    for (const auto& a : future_amplified_ratios(ens, {RatioPeriod::MidTerm, RatioPeriod::LongTerm}, freq, pon,
                                                 cfg.climatology))
        ratios.row({std::string(scenario_name(*a.scenario)), std::string(ratio_period_name(a.period)),
                    std::string(region_code(a.region)), num(a.baseline_d), num(a.target_d), num(a.delta_d),
                    num(a.baseline_pon), num(a.target_pon), num(a.delta_pon), flag(a.zero_baseline)});
    sink.put("fig4eh_ratios.csv", ratios.str());
}

// ---- manifest --------------------------------------------------------------

ojson input_digests(const RunConfig& cfg) {
    const fs::path base = cfg.source.empty() ? fs::path() : cfg.source.parent_path();
    std::vector<std::pair<std::string, fs::path>> inputs{{"outages", cfg.outages}, {"t2m", cfg.t2m}, {"precip", cfg.precip}};
    if (!cfg.regions.empty()) inputs.emplace_back("regions", cfg.regions);
    for (const auto& [k, p] : cfg.indices) inputs.emplace_back("index:" + std::string(index_name(k)), p);
    for (const auto& m : cfg.models) {
        const std::string tag = "model:" + m.model + ":" + std::string(scenario_name(m.scenario));
        if (!m.frequency.empty()) inputs.emplace_back(tag, m.frequency);
        if (!m.t2m.empty()) inputs.emplace_back(tag + ":t2m", m.t2m);
        if (!m.historical_t2m.empty()) inputs.emplace_back(tag + ":historical_t2m", m.historical_t2m);
    }
    std::sort(inputs.begin(), inputs.end());
    ojson out = ojson::array();
    for (const auto& [role, p] : inputs) {
        if (p.empty()) continue;
        out.push_back({{"role", role}, {"path", display_path(p, base)}, {"sha256", fs::exists(p) ? sha256_file(p) : ""}});
    }
    return out;
}

ojson load_manifest(const fs::path& out) {
    const fs::path p = out / "manifest.json";
    if (!fs::exists(p)) return ojson();
    try {
        return ojson::parse(read_bytes(p));
    } catch (const json::exception&) {
        return ojson();
    }
}

bool stage_done(const ojson& manifest, const fs::path& out, StageId s) {
    if (!manifest.is_object() || !manifest.contains("stages")) return false;
    const auto& st = manifest.at("stages");
    const std::string name(stage_name(s));
    if (!st.contains(name)) return false;
    for (const auto& [rel, _] : st.at(name).at("artifacts").items())
        if (!fs::exists(out / rel)) return false;
    return true;
}

}  // namespace

RunResult run(const RunConfig& cfg, const std::vector<StageId>& stages) {
    RunResult res;
    std::vector<StageId> order;
    for (StageId s : kAllStages)
        if (std::find(stages.begin(), stages.end(), s) != stages.end()) order.push_back(s);
    res.stages = order;

    const ojson config_echo = cfg.echo();
    const ojson inputs = input_digests(cfg);
    ojson manifest = load_manifest(cfg.out);
    const bool same_run = manifest.is_object() && manifest.value("config", ojson()) == config_echo &&
                          manifest.value("inputs", ojson()) == inputs;
    if (!same_run) manifest = ojson();

    for (StageId s : order)
        for (StageId d : stage_dependencies(s)) {
            const bool scheduled = std::find(order.begin(), order.end(), d) != order.end();
            if (!scheduled && !stage_done(manifest, cfg.out, d))
                throw Error(ErrorCode::Dependency, "stage '" + std::string(stage_name(s)) + "' needs outputs of '" +
                                                       std::string(stage_name(d)) + "' for this configuration; run it first");
        }

    ojson stages_j = manifest.is_object() && manifest.contains("stages") ? manifest.at("stages") : ojson::object();
    ojson log_j = manifest.is_object() && manifest.contains("log") ? manifest.at("log") : ojson::object();
    Context ctx{cfg, region_map_for(cfg), {}};
    fs::create_directories(cfg.out);
    for (StageId s : order) {
        Sink sink;
        ctx.log.clear();
        switch (s) {
            case StageId::Ingest: stage_ingest(ctx, sink); break;
            case StageId::Extremes: stage_extremes(ctx, sink); break;
            case StageId::Correlate: stage_correlate(ctx, sink); break;
            case StageId::Composite: stage_composite(ctx, sink); break;
            case StageId::Mediate: stage_mediate(ctx, sink); break;
            case StageId::Project: stage_project(ctx, sink); break;
        }
        const std::string name(stage_name(s));
        if (stages_j.contains(name))
            for (const auto& [rel, _] : stages_j.at(name).at("artifacts").items())
                if (!sink.files.count(rel)) fs::remove(cfg.out / rel);
        ojson arts = ojson::object();
        for (const auto& [rel, bytes] : sink.files) {
            write_bytes(cfg.out / rel, bytes);
            arts[rel] = sha256_hex(bytes);
            res.artifacts.push_back(rel);
        }
        stages_j[name] = {{"artifacts", arts}};
        log_j[name] = ctx.log;
        for (const auto& l : ctx.log) res.log.push_back(l);

        ojson m;
        m["tool"] = "ensopon";
        m["version"] = kVersion;
        m["seed"] = cfg.seed;
        m["config"] = config_echo;
        m["inputs"] = inputs;
        ojson ordered_stages = ojson::object();
        ojson ordered_log = ojson::object();
        for (StageId t : kAllStages) {
            const std::string tn(stage_name(t));
            if (stages_j.contains(tn)) ordered_stages[tn] = stages_j.at(tn);
            if (log_j.contains(tn)) ordered_log[tn] = log_j.at(tn);
        }
        m["stages"] = ordered_stages;
        m["log"] = ordered_log;
        write_bytes(cfg.out / "manifest.json", m.dump(2) + "\n");
    }
    return res;
}

// ---------------------------------------------------------------------------
// Report

namespace {

csv::Table artifact_table(const fs::path& dir, const std::string& rel) {
    const fs::path p = dir / rel;
    if (!fs::exists(p)) throw Error(ErrorCode::Artifact, "missing artifact " + rel);
    return csv::parse(read_bytes(p));
}

ojson number_or_null(const std::string& s) {
    auto v = csv::parse_double(s);
    if (!v || !std::isfinite(*v)) return ojson();
    return *v;
}

}  // namespace

ojson report(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw Error(ErrorCode::Artifact, "missing artifact manifest.json");
    const ojson manifest = ojson::parse(read_bytes(dir / "manifest.json"));
    if (!fs::exists(dir / "ingest/ingest_summary.json"))
        throw Error(ErrorCode::Artifact, "missing artifact ingest/ingest_summary.json");
    const ojson ingest = ojson::parse(read_bytes(dir / "ingest/ingest_summary.json"));

    ojson s;
    s["version"] = kVersion;
    s["seed"] = manifest.at("seed");
    s["events"] = ingest.at("events");
    s["eligible_regions"] = ingest.at("eligible_regions");
    s["excluded_regions"] = ingest.at("excluded_regions");

    const auto headline = manifest.at("config").at("analysis").at("headline_index");
    const csv::Table cc = artifact_table(dir, "fig1c_cc_table.csv");
    auto col = [](const csv::Table& t, std::string_view name) {
        auto c = t.column(name);
        if (!c) throw Error(ErrorCode::Artifact, "artifact lacks column " + std::string(name));
        return *c;
    };
    ojson us = ojson::object();
    for (Season season : kAllSeasons) {
        const std::string sn(season_name(season));
        const std::string idx = headline.at(sn).get<std::string>();
        for (const auto& row : cc.rows)
            if (row[col(cc, "season")] == sn && row[col(cc, "target")] == "US" && row[col(cc, "index")] == idx)
                us[sn] = {{"index", idx},
                          {"proxy", row[col(cc, "proxy")]},
                          {"r", number_or_null(row[col(cc, "r")])},
                          {"lag", number_or_null(row[col(cc, "lag")])},
                          {"n", number_or_null(row[col(cc, "n")])},
                          {"p", number_or_null(row[col(cc, "p")])},
                          {"significant", row[col(cc, "significant")] == "true"}};
    }
    s["all_us_cc"] = us;

    const csv::Table sum = artifact_table(dir, "fig1c_summary.csv");
    ojson majority = ojson::object();
    for (Season season : kAllSeasons) majority[std::string(season_name(season))] = ojson::array();
    for (const auto& row : sum.rows)
        if (row[col(sum, "majority")] == "true") majority[row[col(sum, "season")]].push_back(row[col(sum, "index")]);
    s["cc_majority_indices"] = majority;

    const csv::Table comp = artifact_table(dir, "fig1b_composites.csv");
    const csv::Table hsd = artifact_table(dir, "fig1b_hsd.csv");
    ojson comps = ojson::object();
    for (const auto& row : comp.rows) {
        const std::string g = row[col(comp, "group")];
        if (!comps.contains(g)) comps[g] = {{"status", row[col(comp, "status")]}};
        if (row[col(comp, "status")] != "ok") continue;
        comps[g]["anova_p"] = number_or_null(row[col(comp, "anova_p")]);
        comps[g][row[col(comp, "phase")] + "_mean"] = number_or_null(row[col(comp, "mean")]);
    }
    for (const auto& row : hsd.rows)
        if (row[col(hsd, "pair")] == "la_nina-neutral")
            comps[row[col(hsd, "group")]]["la_nina_vs_neutral_significant"] = row[col(hsd, "significant")] == "true";
    s["composites"] = comps;

    const csv::Table fits = artifact_table(dir, "fig4_fits.csv");
    ojson reg = ojson::array();
    for (const auto& row : fits.rows)
        if (row[col(fits, "eligible")] == "true") reg.push_back(row[col(fits, "region")]);
    s["regression_eligible_regions"] = reg;

    const csv::Table hist = artifact_table(dir, "fig4ab_historical.csv");
    ojson hr = ojson::array();
    for (const auto& row : hist.rows)
        hr.push_back({{"region", row[col(hist, "region")]},
                      {"delta_d", number_or_null(row[col(hist, "delta_d")])},
                      {"delta_pon", number_or_null(row[col(hist, "delta_pon")])},
                      {"zero_baseline", row[col(hist, "zero_baseline")] == "true"}});
    s["historical_ratios"] = hr;

    const csv::Table fut = artifact_table(dir, "fig4eh_ratios.csv");
    ojson fr = ojson::array();
    for (const auto& row : fut.rows)
        fr.push_back({{"scenario", row[col(fut, "scenario")]},
                      {"period", row[col(fut, "period")]},
                      {"region", row[col(fut, "region")]},
                      {"delta_d", number_or_null(row[col(fut, "delta_d")])},
                      {"delta_pon", number_or_null(row[col(fut, "delta_pon")])},
                      {"zero_baseline", row[col(fut, "zero_baseline")] == "true"}});
    s["future_ratios"] = fr;

    const csv::Table med = artifact_table(dir, "mediation_summary.csv");
    ojson mr = ojson::object();
    for (const auto& row : med.rows)
        mr[row[col(med, "artifact")]] = {{"cells", number_or_null(row[col(med, "cells")])},
                                         {"flagged", number_or_null(row[col(med, "flagged")])}};
    s["mediation"] = mr;

    write_bytes(dir / "summary.json", s.dump(2) + "\n");
    return s;
}

}  // namespace ensopon::pipeline
