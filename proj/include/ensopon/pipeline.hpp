#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ensopon/analysis.hpp"
#include "ensopon/extremes.hpp"
#include "ensopon/ingest.hpp"
#include "ensopon/projection.hpp"
#include "json.hpp"

namespace ensopon::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

enum class StageId { Ingest, Extremes, Correlate, Composite, Mediate, Project };

inline constexpr StageId kAllStages[] = {StageId::Ingest,    StageId::Extremes, StageId::Correlate,
                                         StageId::Composite, StageId::Mediate,  StageId::Project};

std::string_view stage_name(StageId s);
/// "all" expands to every stage in dependency order.
std::vector<StageId> parse_stages(std::string_view name);
std::vector<StageId> stage_dependencies(StageId s);

struct ModelEntry {
    std::string model;
    Scenario scenario = Scenario::SSP2_45;
    std::filesystem::path frequency;       // precomputed regional CSV, or
    std::filesystem::path t2m;             // daily temperature grid
    std::filesystem::path historical_t2m;  // optional, prepended to t2m
};

struct RunConfig {
    std::filesystem::path source;  // the config file, empty when built in code
    std::filesystem::path outages;
    std::map<IndexKind, std::filesystem::path> indices;
    std::filesystem::path t2m, precip;
    std::filesystem::path regions;  // empty: built-in map
    std::vector<ModelEntry> models;
    std::filesystem::path out = "out";

    MonthRange window = kDefaultStudyWindow;
    YearRange climatology{};
    uint64_t seed = 0;
    double alpha = 0.05;
    int jobs = 1;
    int64_t sparse_threshold = 20;

    ExtremeConfig extremes;
    RegionAggregation aggregation = RegionAggregation::Mean;

    double phase_threshold = 0.5;
    std::map<Season, IndexKind> headline_index{
        {Season::MAM, IndexKind::MEI}, {Season::JJA, IndexKind::MEI}, {Season::SON, IndexKind::MEI},
        {Season::DJF, IndexKind::Nino3}};
    CorrelationSettings cc;
    int delay_max_lag = 12;
    MediationSettings mediation;

    std::vector<Scenario> scenarios{Scenario::SSP2_45, Scenario::SSP5_85};
    ProjectionMode projection_mode = ProjectionMode::PerModel;

    /// Configuration as recorded in the manifest (paths as given, no jobs).
    nlohmann::ordered_json echo() const;
};

/// Relative paths resolve against the config file's directory. Throws E_CONFIG.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct Issue {
    std::string code;  // E_* or W_*
    std::string message;
    bool is_error() const { return !code.empty() && code[0] == 'E'; }
};

struct ValidationReport {
    std::vector<Issue> issues;
    bool ok() const;
    std::string text() const;
};

/// Checks paths, schemas, date coverage, region completeness and grid quality.
ValidationReport validate(const RunConfig& cfg);

struct RunResult {
    std::vector<StageId> stages;
    std::vector<std::string> artifacts;  // relative to cfg.out
    std::vector<std::string> log;
};

/// Runs the stages in order. Stage outputs are written only when the stage
/// succeeds. Throws E_DEPENDENCY when a prerequisite stage's outputs are absent.
RunResult run(const RunConfig& cfg, const std::vector<StageId>& stages);

/// Headline numbers assembled from an artifact directory; also written to
/// summary.json there. Throws E_ARTIFACT when an artifact is missing.
nlohmann::ordered_json report(const std::filesystem::path& out_dir);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ensopon::pipeline
