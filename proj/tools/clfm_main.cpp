// Diagnostics CLI for conditional linear factor models: runs the condition
// and implication-graph checks over moment panels, emits closed-form fixture
// instances, simulates generative panels, and verifies the spanning-factor
// construction.

#include "clfm/builders.hpp"
#include "clfm/diagnostics.hpp"
#include "clfm/fixtures.hpp"
#include "clfm/generative.hpp"
#include "clfm/io.hpp"
#include "clfm/model.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitViolation = 3;

struct GlobalOptions {
    double tol_rank = clfm::Tolerance{}.rel_rank_tol;
    double tol_residual = clfm::Tolerance{}.abs_residual_tol;
    std::string format = "json";
    bool strict = false;
    std::string out_path;
    std::uint64_t seed = 0;

    clfm::io::DiagnosticsConfig config() const {
        clfm::io::DiagnosticsConfig cfg;
        cfg.tol = clfm::Tolerance(tol_rank, tol_residual);
        cfg.strict = strict;
        cfg.seed = seed;
        cfg.format = format == "text" ? clfm::io::OutputFormat::text
                                      : clfm::io::OutputFormat::json;
        return cfg;
    }
};

void write_output(const GlobalOptions& options, const std::string& content) {
    if (options.out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(options.out_path);
    if (!out) {
        throw std::runtime_error("cannot open output file '" + options.out_path + "'");
    }
    out << content;
}

std::string read_all(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path);
    if (!in) {
        throw clfm::io::parse_error("cannot open file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_meaningful_line(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        const auto begin = line.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) {
            continue;
        }
        const auto end = line.find_last_not_of(" \t\r\n");
        line = line.substr(begin, end - begin + 1);
        if (!line.empty() && line[0] != '#') {
            return line;
        }
    }
    return "";
}

int run_diagnose(const GlobalOptions& options, const std::string& path) {
    const std::string content = read_all(path);
    const std::string header = first_meaningful_line(content);
    const auto config = options.config();

    clfm::io::RunResult result;
    std::istringstream in(content);
    if (header == clfm::io::kPanelHeader) {
        result = clfm::io::run_diagnostics(clfm::io::parse_moment_file(in), config);
    } else if (header == clfm::io::kGenSpecHeader) {
        result = clfm::io::run_diagnostics(clfm::io::parse_generative_spec(in), config);
    } else {
        throw clfm::io::parse_error("unrecognized input header '" + header + "'");
    }

    if (config.format == clfm::io::OutputFormat::text) {
        write_output(options, clfm::io::render_text(result.output));
    } else {
        write_output(options, result.output.dump(2) + "\n");
    }
    if (result.violated_edges > 0) {
        return kExitViolation;
    }
    if (result.data_errors > 0 && config.strict) {
        return kExitDataError;
    }
    return kExitOk;
}

int run_fixture(const GlobalOptions& options, bool continuation,
                const std::vector<double>& params) {
    clfm::fixtures::Example3Params p;
    if (!params.empty() && params.size() != 7) {
        std::cerr << "error: --params expects a1,a2,a3,b1,b2,b3,rho\n";
        return kExitUsage;
    }
    if (continuation) {
        // b2 and b3 are determined by the closed form; explicit values for
        // them are ignored so the fixture cannot be inconsistent.
        p = params.empty()
                ? clfm::fixtures::Example3Params::continuation_mode()
                : clfm::fixtures::Example3Params::continuation_mode(
                      params[0], params[1], params[2], params[3], params[6]);
    } else {
        p = params.empty() ? clfm::fixtures::Example3Params::base()
                           : clfm::fixtures::Example3Params::base(
                                 params[0], params[1], params[2], params[3], params[4],
                                 params[5], params[6]);
    }
    const auto instance = clfm::fixtures::example3_instance(p);

    clfm::io::MomentFile file;
    clfm::io::PanelRecord record;
    record.date_label = instance.moments.date_label;
    record.moments = instance.moments;
    record.phi = instance.phi;
    record.w = instance.w;
    file.records.push_back(std::move(record));
    write_output(options, clfm::io::serialize_moment_file(file));
    return kExitOk;
}

int run_generate(const GlobalOptions& options, const std::string& spec_path,
                 clfm::Index dates, const std::string& distribution) {
    if (distribution != "gaussian") {
        throw std::invalid_argument("unsupported distribution '" + distribution + "'");
    }
    const auto spec = clfm::io::parse_generative_spec(spec_path);
    const auto samples = clfm::generative::simulate_panel(
        spec, dates, options.seed, clfm::generative::Distribution::gaussian,
        options.config().tol);
    write_output(options, clfm::io::serialize_samples(samples, options.seed));
    return kExitOk;
}

int run_verify_spanning_construction(const GlobalOptions& options, const std::string& spec_path,
                     int trials) {
    const auto tol = options.config().tol;
    std::ostringstream report;
    bool all_passed = true;

    if (!spec_path.empty()) {
        const auto spec = clfm::io::parse_generative_spec(spec_path);
        const auto result = clfm::generative::verify_spanning_construction(spec, tol);
        report << "spec " << spec_path << ": "
               << (result.all_hold() ? "pass" : "FAIL") << "\n";
        for (const auto& check : result.checks) {
            report << "  " << check.name << ": " << (check.holds ? "holds" : "FAILS")
                   << " (residual=" << check.residual << ")\n";
        }
        all_passed = all_passed && result.all_hold();
    }

    if (trials > 0) {
        std::mt19937_64 rng(options.seed);
        int passed = 0;
        for (int t = 0; t < trials; ++t) {
            clfm::generative::RandomSpecOptions spec_options;
            spec_options.n = 3 + static_cast<clfm::Index>(t % 6);
            spec_options.m = 1 + static_cast<clfm::Index>(t % 4);
            spec_options.eta_rank = static_cast<clfm::Index>(t % (spec_options.n + 1));
            spec_options.duplicate_phi_column = spec_options.m >= 2 && t % 3 == 0;
            const auto spec = clfm::generative::random_spec(rng, spec_options);
            const auto result = clfm::generative::verify_spanning_construction(spec, tol);
            if (result.all_hold()) {
                ++passed;
            } else {
                report << "trial " << t << " (n=" << spec_options.n
                       << ", m=" << spec_options.m
                       << ", eta_rank=" << spec_options.eta_rank << ") FAILED:\n";
                for (const auto& check : result.checks) {
                    if (!check.holds) {
                        report << "  " << check.name << " residual=" << check.residual
                               << "\n";
                    }
                }
            }
        }
        report << passed << "/" << trials << " random specs passed\n";
        all_passed = all_passed && passed == trials;
    }

    write_output(options, report.str());
    return all_passed ? kExitOk : kExitDataError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional linear factor model diagnostics"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOptions options;
    app.add_option("--tol-rank", options.tol_rank,
                   "relative singular-value cutoff for rank decisions")
        ->envname("CLFM_TOL_RANK");
    app.add_option("--tol-residual", options.tol_residual,
                   "residual threshold for equality and membership tests")
        ->envname("CLFM_TOL_RESIDUAL");
    app.add_option("--format", options.format, "output format")
        ->check(CLI::IsMember({"json", "text"}));
    app.add_flag("--strict", options.strict, "treat per-date data errors as fatal");
    app.add_option("--out", options.out_path, "write output to a file instead of stdout");
    app.add_option("--seed", options.seed, "seed for simulation and campaigns");

    auto* diagnose = app.add_subcommand(
        "diagnose", "run all condition and implication checks on a panel or spec file");
    std::string diagnose_path;
    diagnose->add_option("file", diagnose_path, "moment panel or generative spec ('-' for stdin)")
        ->required();

    auto* fixture =
        app.add_subcommand("fixture", "emit a closed-form instance as a panel file");
    std::string fixture_name;
    bool continuation = false;
    std::vector<double> params;
    fixture->add_option("name", fixture_name, "fixture name")
        ->required()
        ->check(CLI::IsMember({"example3"}));
    fixture->add_flag("--continuation", continuation,
                      "spanning continuation mode (b2 = b1, b3 from the closed form)");
    fixture->add_option("--params", params, "a1,a2,a3,b1,b2,b3,rho")->delimiter(',');

    auto* generate =
        app.add_subcommand("generate", "simulate return samples from a generative spec");
    std::string generate_spec_path;
    clfm::Index generate_dates = 0;
    std::string distribution = "gaussian";
    generate->add_option("--spec", generate_spec_path, "generative spec file")->required();
    generate->add_option("--dates", generate_dates, "number of dates to draw")->required();
    generate->add_option("--distribution", distribution, "sampling distribution");

    auto* verify =
        app.add_subcommand("verify-prop7", "verify the spanning-factor construction");
    std::string verify_spec_path;
    int trials = 0;
    verify->add_option("--spec", verify_spec_path, "generative spec file");
    verify->add_option("--trials", trials, "number of random specs to verify");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*diagnose) {
            return run_diagnose(options, diagnose_path);
        }
        if (*fixture) {
            return run_fixture(options, continuation, params);
        }
        if (*generate) {
            return run_generate(options, generate_spec_path, generate_dates, distribution);
        }
        if (*verify) {
            if (verify_spec_path.empty() && trials <= 0) {
                std::cerr << "error: verify-prop7 needs --spec and/or --trials\n";
                return kExitUsage;
            }
            return run_verify_spanning_construction(options, verify_spec_path, trials);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
