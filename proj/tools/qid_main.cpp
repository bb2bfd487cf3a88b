#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qid/qid.hpp"

namespace {

std::vector<double> parse_probe_list(const std::string& csv) {
    std::vector<double> probes;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            probes.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw qid::config_error("--probes: '" + item + "' is not a number");
        }
    }
    if (probes.empty()) throw qid::config_error("--probes: empty list");
    return probes;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qid - numerical evidence for rational infinite divisibility of distributions"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand(
        "analyze", "run the criterion checks described by a JSON config");
    std::string config_path;
    std::string out_path;
    std::string trace_dir;
    std::string probes_csv;
    analyze->add_option("--config", config_path, "analysis config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    analyze->add_option("--out", out_path, "report path (overrides outputs.report)");
    analyze->add_option("--export-traces", trace_dir,
                        "directory for trace CSVs (overrides outputs.trace_dir)");
    analyze->add_option("--probes", probes_csv,
                        "comma-separated probe points (overrides t_probes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems share the config-error exit code
    }

    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read " << config_path << '\n';
            return 2;
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << "error: " << config_path << ": " << e.what() << '\n';
            return 2;
        }

        qid::AnalysisConfig cfg = qid::parse_config(j);
        if (!out_path.empty()) cfg.outputs.report_path = out_path;
        if (!trace_dir.empty()) cfg.outputs.trace_dir = trace_dir;
        if (!probes_csv.empty()) {
            cfg.t_probes = parse_probe_list(probes_csv);
            for (double t : cfg.t_probes)
                if (!(t > 0) || t + 0.1 > cfg.grid.t_max)
                    throw qid::config_error("--probes: probe outside (0, t_max)");
        }
        return qid::run_analysis(cfg, &std::cerr);
    } catch (const qid::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const qid::io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
