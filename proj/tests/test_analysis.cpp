#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qid/analysis.hpp"

using nlohmann::json;
using qid::AnalysisConfig;
using qid::CharFn;

namespace {

const double pi = qid::detail::pi;

json minimal_config() {
    return json::parse(R"({
      "distributions": [ {"name": "poisson_1", "kind": "poisson", "rate": 1.0} ]
    })");
}

/// Small subset of JSON Schema draft-07: type, required, properties, items,
/// enum and #/definitions refs - everything docs/report.schema.json uses.
bool validates(const json& schema, const json& value, const json& root) {
    if (schema.contains("$ref")) {
        const std::string ref = schema.at("$ref");
        REQUIRE(ref.rfind("#/definitions/", 0) == 0);
        return validates(root.at("definitions").at(ref.substr(14)), value, root);
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& candidate : schema.at("enum")) found = found || candidate == value;
        if (!found) return false;
    }
    if (schema.contains("type")) {
        const std::string type = schema.at("type");
        if (type == "object" && !value.is_object()) return false;
        if (type == "array" && !value.is_array()) return false;
        if (type == "string" && !value.is_string()) return false;
        if (type == "integer" && !value.is_number_integer()) return false;
        if (type == "number" && !value.is_number()) return false;
        if (type == "boolean" && !value.is_boolean()) return false;
    }
    if (schema.contains("required"))
        for (const auto& key : schema.at("required"))
            if (!value.contains(key.get<std::string>())) return false;
    if (schema.contains("properties") && value.is_object())
        for (const auto& [key, sub] : schema.at("properties").items())
            if (value.contains(key) && !validates(sub, value.at(key), root)) return false;
    if (schema.contains("items") && value.is_array())
        for (const auto& item : value)
            if (!validates(schema.at("items"), item, root)) return false;
    return true;
}

std::filesystem::path fresh_dir() {
    static std::mt19937_64 rng(std::random_device{}());
    const auto dir = std::filesystem::temp_directory_path() /
                     ("qid_test_" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config defaults") {
    const AnalysisConfig cfg = qid::parse_config(minimal_config());
    CHECK(cfg.grid.t_max == doctest::Approx(4 * pi));
    CHECK(cfg.grid.step == doctest::Approx(pi / 512));
    CHECK(cfg.h_sequence.h0 == 0.2);
    CHECK(cfg.h_sequence.ratio == 0.5);
    CHECK(cfg.h_sequence.count == 7);
    CHECK(cfg.t_probes == std::vector<double>{0.5, 1.0, 2.0});
    CHECK(cfg.k_max == 16);
    CHECK(cfg.outputs.report_path == "report.json");
    CHECK_FALSE(cfg.outputs.trace_dir);
}

TEST_CASE("config validation errors name the offending field") {
    const auto expect_error = [](json j, const std::string& needle) {
        try {
            qid::parse_config(j);
            FAIL_CHECK("expected config_error for " << needle);
        } catch (const qid::config_error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error(json::object(), "distributions");

    json bad_step = minimal_config();
    bad_step["grid"] = {{"t_max", 1.0}, {"step", 0.3}};
    expect_error(bad_step, "grid.step");

    json bad_kind = minimal_config();
    bad_kind["distributions"][0] = {{"kind", "cauchy"}};
    expect_error(bad_kind, "kind");

    json bad_pmf = minimal_config();
    bad_pmf["distributions"][0] = {{"kind", "discrete_pmf"},
                                   {"atoms", json::array({{{"x", 0.0}, {"mass", 0.5}}})}};
    expect_error(bad_pmf, "distributions[0]");

    json bad_probe = minimal_config();
    bad_probe["t_probes"] = {0.5, 100.0};
    expect_error(bad_probe, "t_probes");

    json bad_ratio = minimal_config();
    bad_ratio["h_sequence"] = {{"h0", 0.2}, {"ratio", 1.5}, {"count", 3}};
    expect_error(bad_ratio, "h_sequence.ratio");
}

TEST_CASE("nested distribution parsing") {
    json j = minimal_config();
    j["distributions"] = json::array({{{"name", "shifted"},
                                       {"kind", "scaled_shift"},
                                       {"scale", 2.0},
                                       {"shift", 1.0},
                                       {"base",
                                        {{"kind", "convolution"},
                                         {"parts", json::array({{{"kind", "poisson"}, {"rate", 0.5}},
                                                                {{"kind", "degenerate"},
                                                                 {"location", 1.0}}})}}}}});
    const AnalysisConfig cfg = qid::parse_config(j);
    REQUIRE(cfg.distributions.size() == 1);
    const CharFn& cf = cfg.distributions[0].cf;
    // f(t) = e^{it} * f_base(2t), f_base = poisson(0.5) * e^{it}
    const qid::complex expect =
        std::polar(1.0, 1.0) * CharFn::poisson(0.5)(2.0) * std::polar(1.0, 2.0);
    CHECK(std::abs(cf(1.0) - expect) < 1e-14);
}

TEST_CASE("recovery spacing analysis") {
    CHECK(*qid::recovery_spacing(CharFn::poisson(1.0)) == 1.0);
    CHECK(*qid::recovery_spacing(CharFn::gaussian(0.0, 1.0)) == 0.0);
    CHECK(*qid::recovery_spacing(CharFn::degenerate(2.7)) == 0.0);
    CHECK(*qid::recovery_spacing(CharFn::discrete_pmf({{0.25, 0.5}, {0.75, 0.5}})) ==
          doctest::Approx(0.5));  // offset lattice: differences matter, not locations
    CHECK(*qid::recovery_spacing(CharFn::convolution(
              {CharFn::poisson(1.0), CharFn::gaussian(0.0, 0.3)})) == 1.0);
    CHECK(*qid::recovery_spacing(CharFn::scaled_shift(CharFn::poisson(1.0), 0.5, 3.0)) ==
          doctest::Approx(0.5));
    // two support points always sit on a lattice; three incommensurable ones cannot
    CHECK(*qid::recovery_spacing(CharFn::discrete_pmf({{0.0, 0.5}, {std::sqrt(2.0), 0.5}})) ==
          doctest::Approx(std::sqrt(2.0)));
    CHECK_FALSE(qid::recovery_spacing(
        CharFn::discrete_pmf({{0.0, 0.4}, {1.0, 0.3}, {std::sqrt(2.0), 0.3}})));
}

TEST_CASE("analysis of a batch with mixed outcomes") {
    json j;
    j["distributions"] = json::array(
        {{{"name", "poisson"}, {"kind", "poisson"}, {"rate", 1.0}},
         {{"name", "bern03"},
          {"kind", "discrete_pmf"},
          {"atoms", json::array({{{"x", 0.0}, {"mass", 0.7}}, {{"x", 1.0}, {"mass", 0.3}}})}},
         {{"name", "bern05"},
          {"kind", "discrete_pmf"},
          {"atoms", json::array({{{"x", 0.0}, {"mass", 0.5}}, {{"x", 1.0}, {"mass", 0.5}}})}},
         {{"name", "half_lattice"},
          {"kind", "scaled_shift"},
          {"base", {{"kind", "poisson"}, {"rate", 1.0}}},
          {"scale", 0.5},
          {"shift", 0.0}}});
    j["grid"] = {{"t_max", 2 * pi}, {"step", 2 * pi / 1024}};
    j["t_probes"] = {0.5, 1.0, 2.0};
    const AnalysisConfig cfg = qid::parse_config(j);
    const qid::AnalysisRun run = qid::analyze_all(cfg);
    REQUIRE(run.results.size() == 4);

    CHECK(run.results[0].report.verdict == qid::Verdict::infinitely_divisible);
    CHECK(run.results[0].report.pair->g.atom_mass_at(1.0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(run.results[0].factorization);
    CHECK(run.results[0].min_cf_modulus.value() ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-6));

    CHECK(run.results[1].report.verdict == qid::Verdict::quasi_only);
    CHECK(run.results[1].factorization);
    CHECK_FALSE(run.results[1].factorization->second.g.empty());

    CHECK(run.results[2].report.verdict == qid::Verdict::not_applicable);
    CHECK(run.results[2].zero_cf);
    CHECK(run.results[2].report.reason.find("vanishes") != std::string::npos);
    CHECK(run.any_zero_cf);

    // the half-spaced poisson is rescaled onto the unit lattice and analysed there
    CHECK(run.results[3].report.verdict == qid::Verdict::infinitely_divisible);
    CHECK(run.results[3].lattice_rescale == doctest::Approx(0.5));
    CHECK(run.results[3].report.pair->g.atom_mass_at(1.0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("unsupported supports are reported, not crashed") {
    json j;
    j["distributions"] = json::array(
        {{{"name", "irrational"},
          {"kind", "discrete_pmf"},
          {"atoms", json::array({{{"x", 0.0}, {"mass", 0.4}},
                                 {{"x", 1.0}, {"mass", 0.3}},
                                 {{"x", std::sqrt(2.0)}, {"mass", 0.3}}})}}});
    j["grid"] = {{"t_max", 2 * pi}, {"step", 2 * pi / 1024}};
    const qid::AnalysisRun run = qid::analyze_all(qid::parse_config(j));
    CHECK(run.results[0].report.verdict == qid::Verdict::not_applicable);
    CHECK_FALSE(run.any_zero_cf);
}

TEST_CASE("run_analysis writes a deterministic, schema-valid report") {
    const auto dir = fresh_dir();
    json j;
    j["distributions"] = json::array(
        {{{"name", "poisson"}, {"kind", "poisson"}, {"rate", 1.0}},
         {{"name", "bern05"},
          {"kind", "discrete_pmf"},
          {"atoms", json::array({{{"x", 0.0}, {"mass", 0.5}}, {{"x", 1.0}, {"mass", 0.5}}})}}});
    j["grid"] = {{"t_max", 2 * pi}, {"step", 2 * pi / 1024}};
    j["outputs"] = {{"report", (dir / "report.json").string()},
                    {"trace_dir", (dir / "traces").string()}};
    const AnalysisConfig cfg = qid::parse_config(j);

    CHECK(qid::run_analysis(cfg) == 1);  // bern05 vanishes -> partial failure
    const std::string first = slurp(dir / "report.json");
    CHECK(qid::run_analysis(cfg) == 1);
    CHECK(slurp(dir / "report.json") == first);  // byte-identical reruns

    const json report = json::parse(first);
    const json schema = json::parse(slurp(std::filesystem::path(QID_SOURCE_DIR) /
                                          "docs/report.schema.json"));
    CHECK(validates(schema, report, schema));
    CHECK(report.at("results").size() == 2);
    CHECK(report.at("results")[0].at("verdict") == "infinitely_divisible");
    CHECK(report.at("results")[1].at("verdict") == "not_applicable");

    // trace CSV exists for the analysable law, none for the vanished one
    CHECK(std::filesystem::exists(dir / "traces/poisson.csv"));
    CHECK_FALSE(std::filesystem::exists(dir / "traces/bern05.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_analysis fails with exit 3 on unwritable output") {
    json j = minimal_config();
    j["grid"] = {{"t_max", 2 * pi}, {"step", 2 * pi / 512}};
    j["outputs"] = {{"report", "/nonexistent_dir_for_qid_tests/report.json"}};
    std::ostringstream sink;
    CHECK(qid::run_analysis(qid::parse_config(j), &sink) == 3);
}

TEST_CASE("trace CSV format") {
    const auto dir = fresh_dir();
    SUBCASE("degenerate law rows are (t, 0, t)") {
        const auto tr = qid::distinguished_log(CharFn::degenerate(1.0), 1.0, 0.25);
        qid::export_trace(tr, dir / "deg.csv");
        const std::string csv = slurp(dir / "deg.csv");
        CHECK(csv.rfind("t,re_lnf,im_lnf\n", 0) == 0);
        CHECK(csv.find("\r") == std::string::npos);  // LF only
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);
        int rows = 0;
        while (std::getline(lines, line)) {
            double t, re, im;
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &re, &im) == 3);
            CHECK(re == 0.0);
            CHECK(im == doctest::Approx(t).epsilon(1e-15));
            ++rows;
        }
        CHECK(rows == 9);
    }
    SUBCASE("gaussian row at t = 1 round-trips at full precision") {
        const auto tr = qid::distinguished_log(CharFn::gaussian(0.0, 1.0), 1.0, 0.5);
        qid::export_trace(tr, dir / "gauss.csv");
        std::istringstream lines(slurp(dir / "gauss.csv"));
        std::string line;
        bool seen = false;
        while (std::getline(lines, line)) {
            if (line.rfind("1,", 0) != 0) continue;
            double t, re, im;
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &re, &im) == 3);
            CHECK(re == doctest::Approx(-0.5).epsilon(1e-15));
            CHECK(im == 0.0);
            // %.17g preserves the stored double exactly
            CHECK(re == tr.at(1.0).real());
            seen = true;
        }
        CHECK(seen);
    }
    std::filesystem::remove_all(dir);
}
