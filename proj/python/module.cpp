#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "ensopon/analysis.hpp"
#include "ensopon/distributions.hpp"
#include "ensopon/error.hpp"
#include "ensopon/pipeline.hpp"
#include "ensopon/stats.hpp"
#include "ensopon/synthetic.hpp"
#include "ensopon/timeseries.hpp"

namespace py = pybind11;
using namespace ensopon;

namespace {

MonthlyTimeSeries to_series(const std::vector<double>& v, const std::string& start, Stage stage = Stage::Raw) {
    return MonthlyTimeSeries(YearMonth::parse(start), v, stage);
}

std::vector<double> to_list(const MonthlyTimeSeries& s) {
    std::vector<double> out(s.size());
    for (size_t i = 0; i < s.size(); ++i) out[i] = s.valid[i] ? s.values[i] : kNaN;
    return out;
}

py::dict cc_dict(const CorrelationResult& r) {
    py::dict d;
    d["r"] = r.r;
    d["lag"] = r.lag;
    d["n"] = r.n_samples;
    d["p"] = r.p_value;
    d["computable"] = r.computable;
    return d;
}

py::dict anova_dict(const AnovaResult& a) {
    py::dict d;
    d["group_means"] = a.group_means;
    d["group_sizes"] = a.group_sizes;
    d["grand_mean"] = a.grand_mean;
    d["f"] = a.f;
    d["p"] = a.p;
    d["df_between"] = a.df_between;
    d["df_within"] = a.df_within;
    d["mse_within"] = a.mse_within;
    return d;
}

pipeline::RunConfig config_with(const std::filesystem::path& path, std::optional<std::filesystem::path> out,
                                std::optional<uint64_t> seed, int jobs) {
    auto cfg = pipeline::load_config(path);
    if (out) cfg.out = *out;
    if (seed) cfg.seed = *seed;
    cfg.jobs = jobs;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ENSO / extreme weather / outage analysis core";
    m.attr("__version__") = std::string(pipeline::kVersion);

    static py::exception<Error> exc(m, "EnsoponError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(exc.ptr(), (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def(
        "detrend",
        [](const std::vector<double>& v, const std::string& start) {
            auto [trend, out] = detrend(to_series(v, start));
            return py::make_tuple(trend.intercept, trend.slope, to_list(out));
        },
        py::arg("values"), py::arg("start"));
    m.def(
        "anomaly",
        [](const std::vector<double>& v, const std::string& start, std::pair<int, int> clim) {
            return to_list(anomaly(to_series(v, start, Stage::Detrended), {clim.first, clim.second}));
        },
        py::arg("values"), py::arg("start"), py::arg("climatology") = std::pair{2000, 2023});
    m.def(
        "running_mean3",
        [](const std::vector<double>& v, const std::string& start) {
            return to_list(running_mean3(to_series(v, start, Stage::Anomaly)));
        },
        py::arg("values"), py::arg("start"));
    m.def(
        "preprocess",
        [](const std::vector<double>& v, const std::string& start, std::pair<int, int> clim) {
            return to_list(preprocess(to_series(v, start), {clim.first, clim.second}));
        },
        py::arg("values"), py::arg("start"), py::arg("climatology") = std::pair{2000, 2023});

    m.def(
        "lagged_cc",
        [](const std::vector<double>& x, const std::vector<double>& y, int k, const std::string& norm) {
            return lagged_cc(x, y, k, parse_cc_normalization(norm));
        },
        py::arg("x"), py::arg("y"), py::arg("k"), py::arg("normalization") = "full_series");
    m.def(
        "max_cc",
        [](const std::vector<double>& x, const std::vector<double>& y, int k_min, int k_max, const std::string& mode,
           const std::string& norm) {
            return cc_dict(max_cc(x, y, k_min, k_max, parse_cc_mode(mode), parse_cc_normalization(norm)));
        },
        py::arg("x"), py::arg("y"), py::arg("k_min") = 0, py::arg("k_max") = 12, py::arg("mode") = "most_negative",
        py::arg("normalization") = "full_series");

    m.def(
        "anova", [](const std::vector<std::vector<double>>& g) { return anova_dict(anova(g)); }, py::arg("groups"));
    m.def(
        "tukey_hsd",
        [](const std::vector<std::vector<double>>& g, double alpha) {
            HsdResult h = tukey_hsd(g, alpha);
            py::dict d;
            d["q_critical"] = h.q_critical;
            d["anova"] = anova_dict(h.anova);
            py::list pairs;
            for (const auto& p : h.pairs) {
                py::dict e;
                e["i"] = p.i;
                e["j"] = p.j;
                e["mean_difference"] = p.mean_difference;
                e["critical_value"] = p.critical_value;
                e["q"] = p.q_statistic;
                e["p_adjusted"] = p.p_adjusted;
                e["significant"] = p.significant;
                pairs.append(e);
            }
            d["pairs"] = pairs;
            return d;
        },
        py::arg("groups"), py::arg("alpha") = 0.05);
    m.def("studentized_range_cdf", &dist::studentized_range_cdf, py::arg("q"), py::arg("k"), py::arg("df"));
    m.def("studentized_range_quantile", &dist::studentized_range_quantile, py::arg("alpha"), py::arg("k"),
          py::arg("df"));

    m.def(
        "classify_phase",
        [](const std::vector<double>& v, const std::string& start, double threshold) {
            PhaseSeries ps = classify_phase(to_series(v, start, Stage::Smoothed), threshold);
            std::vector<std::optional<std::string>> out;
            for (size_t i = 0; i < ps.labels.size(); ++i)
                out.push_back(ps.valid[i] ? std::optional<std::string>(std::string(phase_name(ps.labels[i])))
                                          : std::nullopt);
            return out;
        },
        py::arg("values"), py::arg("start"), py::arg("threshold") = 0.5);

    m.def(
        "validate",
        [](const std::filesystem::path& config) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& i : pipeline::validate(pipeline::load_config(config)).issues)
                out.emplace_back(i.code, i.message);
            return out;
        },
        py::arg("config"));
    m.def(
        "run",
        [](const std::filesystem::path& config, const std::string& stage, std::optional<std::filesystem::path> out,
           std::optional<uint64_t> seed, int jobs) {
            auto cfg = config_with(config, out, seed, jobs);
            py::gil_scoped_release nogil;
            return pipeline::run(cfg, pipeline::parse_stages(stage)).artifacts;
        },
        py::arg("config"), py::arg("stage") = "all", py::arg("out") = py::none(), py::arg("seed") = py::none(),
        py::arg("jobs") = 1);
    m.def(
        "report_json", [](const std::filesystem::path& dir) { return pipeline::report(dir).dump(); }, py::arg("out"));
    m.def(
        "synth",
        [](const std::filesystem::path& dir, uint64_t seed, int lag) {
            synth::ChainConfig chain;
            chain.seed = seed;
            chain.lag_months = lag;
            synth::EnsembleConfig ens;
            ens.seed = seed + 1;
            return synth::write_dataset(dir, chain, ens);
        },
        py::arg("out"), py::arg("seed") = 1, py::arg("lag") = 3);
}
