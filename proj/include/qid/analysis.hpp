#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qid/charfn.hpp"
#include "qid/criteria.hpp"
#include "qid/dlog.hpp"
#include "qid/errors.hpp"
#include "qid/recover.hpp"
#include "qid/spectral.hpp"

namespace qid {

inline constexpr int kReportSchemaVersion = 1;

struct GridSpec {
    double t_max = 4.0 * detail::pi;
    double step = detail::pi / 512.0;
};

struct HSequenceSpec {
    double h0 = 0.2;
    double ratio = 0.5;
    int count = 7;
};

struct OutputSpec {
    std::string report_path = "report.json";
    std::optional<std::string> trace_dir;
};

struct DistributionSpec {
    std::string name;
    CharFn cf;
};

struct AnalysisConfig {
    std::vector<DistributionSpec> distributions;
    GridSpec grid;
    HSequenceSpec h_sequence;
    std::vector<double> t_probes{0.5, 1.0, 2.0};
    int k_max = 16;
    double h_fd = 1e-2;
    double weighted_sum_tol = 1e-6;
    double derivative_tol = 1e-4;
    OutputSpec outputs;
};

// --- config parsing ----------------------------------------------------------

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw config_error(path + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(path + "." + key + ": wrong type");
    }
}

template <class T>
T get_field_or(const nlohmann::json& j, const std::string& key, const std::string& path,
               T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(path + "." + key + ": wrong type");
    }
}

inline CharFn parse_distribution_node(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw config_error(path + ": must be an object");
    const std::string kind = get_field<std::string>(j, "kind", path);
    try {
        if (kind == "degenerate")
            return CharFn::degenerate(get_field<double>(j, "location", path));
        if (kind == "gaussian")
            return CharFn::gaussian(get_field<double>(j, "mean", path),
                                    get_field<double>(j, "variance", path));
        if (kind == "poisson") return CharFn::poisson(get_field<double>(j, "rate", path));
        if (kind == "discrete_pmf") {
            if (!j.contains("atoms") || !j.at("atoms").is_array())
                throw config_error(path + ".atoms: missing or not an array");
            const auto& atoms = j.at("atoms");
            std::vector<PmfAtom> parsed;
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                const std::string apath = path + ".atoms[" + std::to_string(i) + "]";
                parsed.push_back({get_field<double>(atoms[i], "x", apath),
                                  get_field<double>(atoms[i], "mass", apath)});
            }
            return CharFn::discrete_pmf(std::move(parsed));
        }
        if (kind == "convolution") {
            if (!j.contains("parts") || !j.at("parts").is_array())
                throw config_error(path + ".parts: missing or not an array");
            std::vector<CharFn> parts;
            for (std::size_t i = 0; i < j.at("parts").size(); ++i)
                parts.push_back(parse_distribution_node(
                    j.at("parts")[i], path + ".parts[" + std::to_string(i) + "]"));
            return CharFn::convolution(std::move(parts));
        }
        if (kind == "scaled_shift") {
            if (!j.contains("base")) throw config_error(path + ".base: missing");
            return CharFn::scaled_shift(parse_distribution_node(j.at("base"), path + ".base"),
                                        get_field<double>(j, "scale", path),
                                        get_field<double>(j, "shift", path));
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(path + ": " + e.what());
    }
    throw config_error(path + ".kind: unknown kind '" + kind + "'");
}

}  // namespace detail

inline AnalysisConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("config: must be a JSON object");
    AnalysisConfig cfg;

    if (j.contains("grid")) {
        cfg.grid.t_max = detail::get_field_or(j.at("grid"), "t_max", "grid", cfg.grid.t_max);
        cfg.grid.step = detail::get_field_or(j.at("grid"), "step", "grid", cfg.grid.step);
    }
    if (!(cfg.grid.step > 0)) throw config_error("grid.step: must be > 0");
    if (!(cfg.grid.t_max > 0)) throw config_error("grid.t_max: must be > 0");
    const double ratio = cfg.grid.t_max / cfg.grid.step;
    if (ratio > 5e7) throw config_error("grid.step: grid too fine for t_max");
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw config_error("grid.step: must divide grid.t_max");

    if (j.contains("h_sequence")) {
        const auto& h = j.at("h_sequence");
        cfg.h_sequence.h0 = detail::get_field_or(h, "h0", "h_sequence", cfg.h_sequence.h0);
        cfg.h_sequence.ratio = detail::get_field_or(h, "ratio", "h_sequence", cfg.h_sequence.ratio);
        cfg.h_sequence.count = detail::get_field_or(h, "count", "h_sequence", cfg.h_sequence.count);
    }
    if (!(cfg.h_sequence.h0 > 0)) throw config_error("h_sequence.h0: must be > 0");
    if (!(cfg.h_sequence.ratio > 0) || !(cfg.h_sequence.ratio < 1))
        throw config_error("h_sequence.ratio: must lie in (0, 1)");
    if (cfg.h_sequence.count < 1) throw config_error("h_sequence.count: must be >= 1");

    cfg.t_probes = detail::get_field_or(j, "t_probes", "config", cfg.t_probes);
    if (cfg.t_probes.empty()) throw config_error("t_probes: must be nonempty");
    for (double t : cfg.t_probes) {
        if (!(t > 0)) throw config_error("t_probes: probes must be > 0");
        if (t + 0.1 > cfg.grid.t_max)
            throw config_error("t_probes: probe exceeds grid coverage");
    }

    if (j.contains("recovery"))
        cfg.k_max = detail::get_field_or(j.at("recovery"), "k_max", "recovery", cfg.k_max);
    if (cfg.k_max < 1) throw config_error("recovery.k_max: must be >= 1");

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        cfg.weighted_sum_tol =
            detail::get_field_or(t, "weighted_sum", "tolerances", cfg.weighted_sum_tol);
        cfg.derivative_tol =
            detail::get_field_or(t, "derivative", "tolerances", cfg.derivative_tol);
        cfg.h_fd = detail::get_field_or(t, "h_fd", "tolerances", cfg.h_fd);
    }
    if (!(cfg.weighted_sum_tol > 0)) throw config_error("tolerances.weighted_sum: must be > 0");
    if (!(cfg.derivative_tol > 0)) throw config_error("tolerances.derivative: must be > 0");
    if (!(cfg.h_fd > 0)) throw config_error("tolerances.h_fd: must be > 0");

    if (!j.contains("distributions") || !j.at("distributions").is_array() ||
        j.at("distributions").empty())
        throw config_error("distributions: must be a nonempty array");
    for (std::size_t i = 0; i < j.at("distributions").size(); ++i) {
        const auto& d = j.at("distributions")[i];
        const std::string path = "distributions[" + std::to_string(i) + "]";
        DistributionSpec spec;
        spec.name = detail::get_field_or<std::string>(d, "name", path,
                                                      "dist_" + std::to_string(i));
        spec.cf = detail::parse_distribution_node(d, path);
        cfg.distributions.push_back(std::move(spec));
    }

    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        cfg.outputs.report_path =
            detail::get_field_or<std::string>(o, "report", "outputs", cfg.outputs.report_path);
        if (o.contains("trace_dir"))
            cfg.outputs.trace_dir = detail::get_field<std::string>(o, "trace_dir", "outputs");
    }
    return cfg;
}

// --- lattice structure -------------------------------------------------------

/// Spacing d such that the law decomposes into a d-lattice discrete part plus
/// optional Gaussian and shift components (0 = no lattice constraint, i.e.
/// Gaussian/degenerate only). Empty when the support structure is outside
/// what spectral recovery handles.
inline std::optional<double> recovery_spacing(const CharFn& cf) {
    using Opt = std::optional<double>;
    return cf.visit(detail::overloaded{
        [](const CharFn::Degenerate&) -> Opt { return 0.0; },
        [](const CharFn::Gaussian&) -> Opt { return 0.0; },
        [](const CharFn::Poisson&) -> Opt { return 1.0; },
        [](const CharFn::DiscretePmf& pmf) -> Opt {
            // offsets fold into the shift, so only location differences matter
            std::vector<double> diffs;
            for (std::size_t i = 1; i < pmf.atoms.size(); ++i)
                diffs.push_back(pmf.atoms[i].x - pmf.atoms[0].x);
            if (diffs.empty()) return 0.0;
            auto d = detail::common_spacing(diffs);
            if (!d) return std::nullopt;
            return *d == 0.0 ? Opt(0.0) : Opt(*d);
        },
        [](const CharFn::Convolution& c) -> Opt {
            double g = 0;
            for (const auto& part : c.parts) {
                const auto d = recovery_spacing(part);
                if (!d) return std::nullopt;
                if (*d == 0.0) continue;
                g = (g == 0) ? *d : detail::float_gcd(g, *d, 1e-9);
                if (g < 1e-6) return std::nullopt;
            }
            return g;
        },
        [](const CharFn::ScaledShift& s) -> Opt {
            const auto d = recovery_spacing(s.base);
            if (!d) return std::nullopt;
            return *d * std::abs(s.scale);
        }});
}

// --- analysis ----------------------------------------------------------------

struct DistributionResult {
    std::string name;
    CriterionReport report;
    std::optional<std::pair<SpectralPair, SpectralPair>> factorization;
    double lattice_rescale = 1.0;
    std::optional<double> min_cf_modulus;
    bool zero_cf = false;
    std::optional<LogTrace> trace;  // kept for export
};

struct AnalysisRun {
    std::vector<DistributionResult> results;
    bool any_zero_cf = false;
};

inline ClassifySettings classify_settings(const AnalysisConfig& cfg) {
    ClassifySettings s;
    s.h0 = cfg.h_sequence.h0;
    s.ratio = cfg.h_sequence.ratio;
    s.levels = cfg.h_sequence.count;
    s.t_probes = cfg.t_probes;
    s.h_fd = cfg.h_fd;
    s.weighted_sum_tol = cfg.weighted_sum_tol;
    s.derivative_tol = cfg.derivative_tol;
    return s;
}

inline DistributionResult analyze_distribution(const DistributionSpec& spec,
                                               const AnalysisConfig& cfg,
                                               std::ostream* diagnostics = nullptr) {
    DistributionResult result;
    result.name = spec.name;

    CharFn cf = spec.cf;
    const auto spacing = recovery_spacing(cf);
    if (spacing && *spacing > 0 && std::abs(*spacing - 1.0) > 1e-9) {
        // normalise to the unit lattice; membership of the classes under test
        // is scale-invariant, and the reported pair refers to the rescaled law
        result.lattice_rescale = *spacing;
        cf = CharFn::scaled_shift(cf, 1.0 / *spacing, 0.0);
    }

    LogTrace trace;
    try {
        trace = distinguished_log(cf, cfg.grid.t_max, cfg.grid.step);
    } catch (const zero_cf_error& e) {
        result.zero_cf = true;
        result.report.verdict = Verdict::not_applicable;
        result.report.reason = std::string("characteristic function vanishes: ") + e.what();
        if (diagnostics)
            *diagnostics << "warning: " << spec.name << ": " << result.report.reason << '\n';
        return result;
    }

    double min_log = 0;
    for (const complex& v : trace.values) min_log = std::min(min_log, v.real());
    result.min_cf_modulus = std::exp(min_log);

    if (!spacing) {
        result.report.verdict = Verdict::not_applicable;
        result.report.reason =
            "spectral recovery supports lattice laws with optional Gaussian and shift "
            "components only";
        result.trace = std::move(trace);
        return result;
    }

    SpectralPair pair;
    try {
        pair = recover_lattice_spectral(trace, cfg.k_max);
    } catch (const std::exception& e) {
        result.report.verdict = Verdict::not_applicable;
        result.report.reason = std::string("spectral recovery failed: ") + e.what();
        result.trace = std::move(trace);
        return result;
    }

    result.report = classify(trace, pair, classify_settings(cfg));
    if (result.report.pair) result.factorization = factorize(*result.report.pair);
    result.trace = std::move(trace);
    return result;
}

inline AnalysisRun analyze_all(const AnalysisConfig& cfg, std::ostream* diagnostics = nullptr) {
    AnalysisRun run;
    for (const auto& spec : cfg.distributions) {
        run.results.push_back(analyze_distribution(spec, cfg, diagnostics));
        run.any_zero_cf = run.any_zero_cf || run.results.back().zero_cf;
    }
    return run;
}

// --- report and trace output ---------------------------------------------------

inline nlohmann::json report_to_json(const AnalysisRun& run, const AnalysisConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["grid"] = {{"t_max", cfg.grid.t_max}, {"step", cfg.grid.step}};
    j["h_sequence"] = {{"h0", cfg.h_sequence.h0},
                       {"ratio", cfg.h_sequence.ratio},
                       {"count", cfg.h_sequence.count}};
    j["t_probes"] = cfg.t_probes;
    j["recovery"] = {{"k_max", cfg.k_max}};
    j["tolerances"] = {{"weighted_sum", cfg.weighted_sum_tol},
                       {"derivative", cfg.derivative_tol},
                       {"h_fd", cfg.h_fd}};
    j["results"] = nlohmann::json::array();
    for (const auto& r : run.results) {
        nlohmann::json e = r.report;  // verdict, trajectories, pair, ...
        e["name"] = r.name;
        if (r.lattice_rescale != 1.0) e["lattice_rescale"] = r.lattice_rescale;
        if (r.min_cf_modulus) e["min_cf_modulus"] = *r.min_cf_modulus;
        if (r.factorization) {
            e["factorization"] = {{"positive", r.factorization->first},
                                  {"negative", r.factorization->second}};
        }
        j["results"].push_back(std::move(e));
    }
    return j;
}

/// CSV rows (t, Re Ln f, Im Ln f) with %.17g formatting and LF line endings.
inline void export_trace(const LogTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "t,re_lnf,im_lnf\n";
    char row[128];
    for (std::size_t i = 0; i < trace.grid.size(); ++i) {
        std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g\n", trace.grid[i],
                      trace.values[i].real(), trace.values[i].imag());
        out << row;
    }
    if (!out) throw io_error("failed writing " + path.string());
}

namespace detail {

inline std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? "trace" : out;
}

}  // namespace detail

/// Run the whole batch: analyze every distribution, write the report (and
/// optional trace CSVs), and return the process exit code: 0 on success, 1
/// when any characteristic function vanished (those entries are reported as
/// not_applicable), 3 on output failures. Configuration errors are thrown as
/// config_error before any analysis starts.
inline int run_analysis(const AnalysisConfig& cfg, std::ostream* diagnostics = nullptr) {
    const AnalysisRun run = analyze_all(cfg, diagnostics);
    try {
        const nlohmann::json report = report_to_json(run, cfg);
        std::ofstream out(cfg.outputs.report_path, std::ios::binary);
        if (!out) throw io_error("cannot open " + cfg.outputs.report_path + " for writing");
        out << report.dump(2) << '\n';
        if (!out) throw io_error("failed writing " + cfg.outputs.report_path);

        if (cfg.outputs.trace_dir) {
            std::filesystem::create_directories(*cfg.outputs.trace_dir);
            for (const auto& r : run.results) {
                if (!r.trace) continue;
                export_trace(*r.trace, std::filesystem::path(*cfg.outputs.trace_dir) /
                                           (detail::sanitize_filename(r.name) + ".csv"));
            }
        }
    } catch (const io_error& e) {
        if (diagnostics) *diagnostics << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        if (diagnostics) *diagnostics << "error: " << e.what() << '\n';
        return 3;
    }
    return run.any_zero_cf ? 1 : 0;
}

}  // namespace qid
