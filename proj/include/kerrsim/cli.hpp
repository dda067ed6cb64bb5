#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kerrsim/experiments.hpp"
#include "kerrsim/kerrsim_version.hpp"

namespace kerrsim::cli {

using json = nlohmann::json;

// Fully resolved run description; embedded in every report for provenance.
struct CliSpec {
    std::string command;
    double alpha = 100.0;
    std::string thetaText = "0.3";
    std::vector<double> thetaValues = {0.3};
    double noiseSigma = 0.0;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    std::string input;
    std::string out = "-";
    std::string format = "json";
    double targetXd = 8.0;
    unsigned jobs = 1;

    double single_theta() const {
        if (thetaValues.size() != 1)
            throw invalid_input(command + ": takes a single theta, not a range");
        return thetaValues.front();
    }

    GateConfig gate_config() const {
        GateConfig g;
        g.alpha = alpha;
        g.theta = single_theta();
        g.noiseSigma = noiseSigma;
        g.seed = seed;
        return g;
    }
};

namespace detail_cli {

inline std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& text, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw invalid_input(what + ": cannot parse '" + text + "' as a number");
    }
    if (pos != text.size()) throw invalid_input(what + ": trailing junk in '" + text + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

inline std::uint64_t parse_trials(const std::string& text) {
    const double v = parse_double(text, "trials");
    if (!(v >= 1.0) || v > 1e12) throw invalid_input("trials must lie in [1, 1e12]");
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-6 * std::max(1.0, std::abs(v)))
        throw invalid_input("trials must be a whole number, got '" + text + "'");
    return static_cast<std::uint64_t>(r);
}

// Accepts a single value, a comma list, or an inclusive start:stop:step range.
inline std::vector<double> parse_theta_values(const std::string& text) {
    std::vector<double> out;
    const auto colons = std::count(text.begin(), text.end(), ':');
    if (colons == 2) {
        const auto parts = split(text, ':');
        const double start = parse_double(parts[0], "theta range start");
        const double stop = parse_double(parts[1], "theta range stop");
        const double step = parse_double(parts[2], "theta range step");
        if (!(step > 0.0)) throw invalid_input("theta range step must be positive");
        if (stop < start) throw invalid_input("theta range stop must be >= start");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    } else if (colons == 0) {
        for (const auto& part : split(text, ','))
            out.push_back(parse_double(part, "theta"));
    } else {
        throw invalid_input("theta: expected a value, comma list, or start:stop:step range");
    }
    if (out.empty()) throw invalid_input("theta: no values given");
    for (double th : out)
        if (!(th > 0.0) || th > kHalfPi)
            throw invalid_input("theta values must lie in (0, pi/2]");
    return out;
}

inline QubitInit parse_qubit_token(const std::string& token) {
    const double r = 0.70710678118654752440;
    if (token == "H") return QubitInit::basis_h();
    if (token == "V") return QubitInit::basis_v();
    if (token == "D") return QubitInit::plus();
    if (token == "A") return QubitInit::minus();
    if (token == "R") return QubitInit::hv({r, 0.0}, {0.0, r});
    if (token == "L") return QubitInit::hv({r, 0.0}, {0.0, -r});
    if (token == "VAC") return QubitInit::vac();
    throw invalid_input("unknown qubit token '" + token + "' (expected H,V,D,A,R,L,VAC)");
}

inline std::vector<QubitInit> parse_input_state(const std::string& descriptor) {
    std::vector<QubitInit> qs;
    for (const auto& token : split(descriptor, ',')) qs.push_back(parse_qubit_token(token));
    return qs;
}

inline BellLabel parse_bell_label(std::string token) {
    if (token.rfind("bell:", 0) == 0) token = token.substr(5);
    if (token == "phi+") return BellLabel::PhiPlus;
    if (token == "phi-") return BellLabel::PhiMinus;
    if (token == "psi+") return BellLabel::PsiPlus;
    if (token == "psi-") return BellLabel::PsiMinus;
    throw invalid_input("unknown Bell label '" + token + "' (expected phi+,phi-,psi+,psi-)");
}

inline std::string iso8601_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json error_model_json(const ErrorModel& m) {
    return json{{"alpha", m.alpha},       {"theta", m.theta},
                {"snr", m.snr},           {"x0", m.x0},
                {"xd", m.xd},             {"pErrDetector", m.pErrDetector},
                {"pErrParity", m.pErrParity}};
}

inline json mc_json(const MonteCarloReport& r, const char* countName) {
    return json{{"trials", r.trials},
                {countName, r.successes},
                {"rate", r.pointEstimate},
                {"wilson95", json::array({r.wilson.lo, r.wilson.hi})},
                {"seed", r.seed}};
}

inline json mean_json(const MeanReport& r) {
    return json{{"trials", r.trials}, {"mean", r.mean}, {"min", r.min},
                {"max", r.max},       {"seed", r.seed}};
}

} // namespace detail_cli

// Raw option values as given on the command line; absent means "defer to the
// config file, then to the environment, then to the default".
struct RawArgs {
    std::optional<double> alpha;
    std::optional<std::string> theta;
    std::optional<double> noiseSigma;
    std::optional<std::string> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> input;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<unsigned> jobs;
    std::optional<double> targetXd;
    std::optional<std::string> config;
};

inline CliSpec resolve_spec(const std::string& command, const RawArgs& raw) {
    json cfg = json::object();
    if (raw.config) {
        std::ifstream in(*raw.config);
        if (!in) throw invalid_input("config: cannot open '" + *raw.config + "'");
        try {
            in >> cfg;
        } catch (const std::exception& e) {
            throw invalid_input("config: invalid JSON in '" + *raw.config + "': " + e.what());
        }
        if (!cfg.is_object()) throw invalid_input("config: top level must be a JSON object");
        static const std::vector<std::string> known = {
            "alpha", "theta",  "noise-sigma", "trials",    "seed",
            "input", "out",    "format",      "jobs",      "target-xd"};
        for (const auto& [key, value] : cfg.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw invalid_input("config: unknown field '" + key + "'");
    }

    CliSpec spec;
    spec.command = command;

    if (raw.alpha)
        spec.alpha = *raw.alpha;
    else if (cfg.contains("alpha"))
        spec.alpha = cfg["alpha"].get<double>();

    if (raw.theta) {
        spec.thetaText = *raw.theta;
    } else if (cfg.contains("theta")) {
        const auto& t = cfg["theta"];
        spec.thetaText = t.is_string() ? t.get<std::string>()
                                       : detail_cli::format_g(t.get<double>());
    }
    spec.thetaValues = detail_cli::parse_theta_values(spec.thetaText);

    if (raw.noiseSigma)
        spec.noiseSigma = *raw.noiseSigma;
    else if (cfg.contains("noise-sigma"))
        spec.noiseSigma = cfg["noise-sigma"].get<double>();

    if (raw.trials) {
        spec.trials = detail_cli::parse_trials(*raw.trials);
    } else if (cfg.contains("trials")) {
        const auto& t = cfg["trials"];
        spec.trials = t.is_string() ? detail_cli::parse_trials(t.get<std::string>())
                                    : detail_cli::parse_trials(t.dump());
    }

    if (raw.seed) {
        spec.seed = *raw.seed;
    } else if (cfg.contains("seed")) {
        spec.seed = cfg["seed"].get<std::uint64_t>();
    } else if (const char* env = std::getenv("KERRSIM_SEED")) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(env, &pos);
        } catch (const std::exception&) {
            throw invalid_input("KERRSIM_SEED: cannot parse '" + std::string(env) + "'");
        }
        if (pos != std::string(env).size())
            throw invalid_input("KERRSIM_SEED: trailing junk in '" + std::string(env) + "'");
        spec.seed = v;
    }

    if (raw.input)
        spec.input = *raw.input;
    else if (cfg.contains("input"))
        spec.input = cfg["input"].get<std::string>();

    if (raw.out)
        spec.out = *raw.out;
    else if (cfg.contains("out"))
        spec.out = cfg["out"].get<std::string>();

    if (raw.format)
        spec.format = *raw.format;
    else if (cfg.contains("format"))
        spec.format = cfg["format"].get<std::string>();
    if (spec.format != "json" && spec.format != "csv")
        throw invalid_input("format must be 'json' or 'csv'");

    if (raw.jobs)
        spec.jobs = *raw.jobs;
    else if (cfg.contains("jobs"))
        spec.jobs = cfg["jobs"].get<unsigned>();
    if (spec.jobs < 1) throw invalid_input("jobs must be >= 1");

    if (raw.targetXd)
        spec.targetXd = *raw.targetXd;
    else if (cfg.contains("target-xd"))
        spec.targetXd = cfg["target-xd"].get<double>();

    return spec;
}

inline json spec_json(const CliSpec& spec) {
    json j{{"command", spec.command},
           {"alpha", spec.alpha},
           {"noiseSigma", spec.noiseSigma},
           {"trials", spec.trials},
           {"seed", spec.seed},
           {"input", spec.input},
           {"out", spec.out},
           {"format", spec.format}};
    if (spec.command == "sweep") {
        j["theta"] = spec.thetaText;
        j["targetXd"] = spec.targetXd;
    } else {
        j["theta"] = spec.single_theta();
    }
    return j;
}

struct CommandOutput {
    json results;
    std::string csv;
    int exitCode = 0;
};

namespace detail_cli {

inline std::string csv_row(std::initializer_list<std::string> cells) {
    std::string row;
    for (const auto& c : cells) {
        if (!row.empty()) row.push_back(',');
        row += c;
    }
    row.push_back('\n');
    return row;
}

inline CommandOutput run_detector(const CliSpec& spec) {
    const auto rep =
        experiments::detector_error_report(spec.gate_config(), spec.trials, spec.seed, spec.jobs);
    CommandOutput out;
    out.results = {{"errorModel", error_model_json(rep.model)},
                   {"analyticErrorRate", rep.model.pErrDetector},
                   {"monteCarlo", mc_json(rep.mc, "errors")}};
    out.csv = "trials,errors,errorRate,wilsonLow,wilsonHigh,analyticErrorRate\n" +
              csv_row({std::to_string(rep.mc.trials), std::to_string(rep.mc.successes),
                       format_g(rep.mc.pointEstimate), format_g(rep.mc.wilson.lo),
                       format_g(rep.mc.wilson.hi), format_g(rep.model.pErrDetector)});
    return out;
}

inline CommandOutput run_parity(const CliSpec& spec) {
    const GateConfig gc = spec.gate_config();
    const auto herald = experiments::parity_error_report(gc, spec.trials, spec.seed, spec.jobs);
    const auto cond = experiments::parity_conditional_report(gc, spec.trials,
                                                             substream_seed(spec.seed, 1), spec.jobs);
    CommandOutput out;
    out.results = {{"errorModel", error_model_json(herald.model)},
                   {"analyticErrorRate", herald.model.pErrParity},
                   {"heraldError", mc_json(herald.mc, "errors")},
                   {"conditional",
                    {{"trials", cond.trials},
                     {"evenCount", cond.evenCount},
                     {"oddCount", cond.oddCount},
                     {"evenMeanFidelity", cond.evenMeanFidelity},
                     {"oddMeanFidelity", cond.oddMeanFidelity},
                     {"evenMinFidelity", cond.evenMinFidelity},
                     {"oddMinFidelity", cond.oddMinFidelity}}}};
    out.csv = "trials,errors,errorRate,wilsonLow,wilsonHigh,analyticErrorRate,evenMeanFidelity,"
              "oddMeanFidelity\n" +
              csv_row({std::to_string(herald.mc.trials), std::to_string(herald.mc.successes),
                       format_g(herald.mc.pointEstimate), format_g(herald.mc.wilson.lo),
                       format_g(herald.mc.wilson.hi), format_g(herald.model.pErrParity),
                       format_g(cond.evenMeanFidelity), format_g(cond.oddMeanFidelity)});
    return out;
}

inline CommandOutput run_bell(const CliSpec& spec) {
    const GateConfig gc = spec.gate_config();
    CommandOutput out;
    const json labels = json::array({"phi+", "phi-", "psi+", "psi-"});
    if (!spec.input.empty()) {
        const BellLabel input = parse_bell_label(spec.input);
        const auto row = experiments::bell_state_row(gc, input, spec.trials, spec.seed, spec.jobs);
        out.results = {{"labels", labels},
                       {"input", to_string(input)},
                       {"trials", spec.trials},
                       {"counts", row.counts},
                       {"meanFidelity", row.meanFidelity},
                       {"minFidelity", row.minFidelity}};
        out.csv = "input,phi+,phi-,psi+,psi-,meanFidelity\n" +
                  csv_row({to_string(input), std::to_string(row.counts[0]),
                           std::to_string(row.counts[1]), std::to_string(row.counts[2]),
                           std::to_string(row.counts[3]), format_g(row.meanFidelity)});
        return out;
    }
    const auto rep = experiments::bell_confusion_report(gc, spec.trials, spec.seed, spec.jobs);
    json confusion = json::array();
    json diag = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        confusion.push_back(rep.counts[i]);
        diag.push_back(static_cast<double>(rep.counts[i][i]) / static_cast<double>(spec.trials));
    }
    out.results = {{"labels", labels},
                   {"trialsPerState", spec.trials},
                   {"confusion", confusion},
                   {"diagonalRates", diag},
                   {"minDiagonalRate", rep.min_diagonal_rate()},
                   {"meanFidelity", rep.meanFidelity},
                   {"minFidelity", rep.minFidelity},
                   {"errorModel", error_model_json(error_model(gc.alpha, gc.theta))}};
    out.csv = "input,phi+,phi-,psi+,psi-,meanFidelity\n";
    for (std::size_t i = 0; i < 4; ++i)
        out.csv += csv_row({to_string(experiments::kBellOrder[i]), std::to_string(rep.counts[i][0]),
                            std::to_string(rep.counts[i][1]), std::to_string(rep.counts[i][2]),
                            std::to_string(rep.counts[i][3]), format_g(rep.meanFidelity[i])});
    return out;
}

inline CommandOutput run_cnot(const CliSpec& spec) {
    const GateConfig gc = spec.gate_config();
    CommandOutput out;
    if (!spec.input.empty()) {
        const auto qs = parse_input_state(spec.input);
        if (qs.size() != 2) throw invalid_input("cnot: input descriptor needs two qubit tokens");
        const HybridState reference = experiments::ideal_cnot_reference(new_product_state(qs), 0, 1);
        const auto mean = run_mean(
            [&qs, &gc, &reference](RngStream& rng) {
                auto [o, post] = cnot(new_product_state(qs), 0, 1, gc, rng);
                return fidelity(post, reference).value;
            },
            spec.trials, spec.seed, spec.jobs);
        out.results = {{"input", spec.input}, {"fidelity", mean_json(mean)}};
        out.csv = "input,trials,meanFidelity,minFidelity\n" +
                  csv_row({spec.input, std::to_string(mean.trials), format_g(mean.mean),
                           format_g(mean.min)});
        return out;
    }
    const auto rep = experiments::cnot_report(gc, spec.trials, spec.seed, spec.jobs);
    out.results = {{"errorModel", error_model_json(error_model(gc.alpha, gc.theta))},
                   {"truthTableMinFidelity", rep.truthTableMinFidelity},
                   {"basisError", mc_json(rep.basisError, "errors")},
                   {"entangling", mean_json(rep.entanglingFidelity)}};
    out.csv = "metric,value\n" +
              csv_row({"truthTableMinFidelity", format_g(rep.truthTableMinFidelity)}) +
              csv_row({"basisErrorRate", format_g(rep.basisError.pointEstimate)}) +
              csv_row({"entanglingMeanFidelity", format_g(rep.entanglingFidelity.mean)});
    return out;
}

inline CommandOutput run_sweep(const CliSpec& spec) {
    const auto rows = experiments::sweep_required_alpha(spec.thetaValues, spec.targetXd);
    CommandOutput out;
    json jrows = json::array();
    out.csv = "theta,alpha,photonNumber,pErrParity\n";
    for (const auto& r : rows) {
        jrows.push_back({{"theta", r.theta},
                         {"alpha", r.alpha},
                         {"photonNumber", r.photonNumber},
                         {"pErrParity", r.pErrParity}});
        out.csv += csv_row({format_g(r.theta), format_g(r.alpha), format_g(r.photonNumber),
                            format_g(r.pErrParity)});
    }
    out.results = {{"targetXd", spec.targetXd}, {"rows", jrows}};
    return out;
}

inline CommandOutput run_validate(const CliSpec& spec) {
    const auto rep = experiments::validate_report(spec.alpha, spec.single_theta());
    CommandOutput out;
    json jrows = json::array();
    out.csv = "name,densityLinf,minPosteriorFidelity\n";
    for (const auto& r : rep.rows) {
        jrows.push_back({{"name", r.name},
                         {"densityLinf", r.densityLinf},
                         {"minPosteriorFidelity", r.minPosteriorFidelity}});
        out.csv += csv_row({r.name, format_g(r.densityLinf), format_g(r.minPosteriorFidelity)});
    }
    out.results = {{"alpha", rep.alpha},
                   {"theta", rep.theta},
                   {"maxDensityLinf", rep.maxDensityLinf},
                   {"minPosteriorFidelity", rep.minPosteriorFidelity},
                   {"pass", rep.pass},
                   {"rows", jrows}};
    out.exitCode = rep.pass ? 0 : 3;
    return out;
}

inline void write_output(const CliSpec& spec, const std::string& text) {
    if (spec.out == "-" || spec.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(spec.out, std::ios::binary);
    if (!f) throw invalid_input("out: cannot open '" + spec.out + "' for writing");
    f << text;
}

} // namespace detail_cli

// Parse arguments (program name excluded), run the experiment, write the
// report. Returns the process exit status: 0 ok, 2 usage/config error,
// 3 numerical or validation failure.
inline int run(std::vector<std::string> args) {
    const auto t0 = std::chrono::steady_clock::now();
    RawArgs raw;

    CLI::App app{"Weak-cross-Kerr + homodyne quantum gate simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"detector", "Photon presence detector misidentification rate"},
        {"parity", "Two-qubit parity gate herald error and conditional states"},
        {"bell", "Bell-state analyzer confusion matrix"},
        {"cnot", "Ancilla-assisted CNOT truth table and entangling check"},
        {"sweep", "Required probe amplitude across a theta range"},
        {"validate", "Branch engine vs truncated Fock oracle cross-check"}};
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--alpha", raw.alpha, "Probe coherent amplitude");
        sub->add_option("--theta", raw.theta,
                        name == "sweep" ? "Kerr angle value, comma list, or start:stop:step"
                                        : "Kerr phase shift per photon, in (0, pi/2]");
        sub->add_option("--noise-sigma", raw.noiseSigma, "Gaussian readout noise sigma");
        sub->add_option("--trials", raw.trials, "Trial count (scientific notation accepted)");
        sub->add_option("--seed", raw.seed, "Master RNG seed");
        sub->add_option("--jobs", raw.jobs, "Worker thread hint (never changes results)");
        sub->add_option("--out", raw.out, "Output path, '-' for stdout");
        sub->add_option("--format", raw.format, "Report format: json or csv");
        sub->add_option("--config", raw.config, "JSON config file; flags override it");
        if (name == "bell")
            sub->add_option("--input", raw.input, "Prepared state (phi+, phi-, psi+, psi-)");
        if (name == "cnot")
            sub->add_option("--input", raw.input, "Two qubit tokens, e.g. H,V or D,H");
        if (name == "sweep")
            sub->add_option("--target-xd", raw.targetXd, "Peak separation to provision for");
    }

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // help or version request
        const json err = {{"error", {{"exitCode", 2}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << '\n';
        return 2;
    }

    std::string command;
    for (const auto& [name, desc] : commands)
        if (app.got_subcommand(name)) command = name;

    try {
        const CliSpec spec = resolve_spec(command, raw);
        CommandOutput result;
        if (command == "detector")
            result = detail_cli::run_detector(spec);
        else if (command == "parity")
            result = detail_cli::run_parity(spec);
        else if (command == "bell")
            result = detail_cli::run_bell(spec);
        else if (command == "cnot")
            result = detail_cli::run_cnot(spec);
        else if (command == "sweep")
            result = detail_cli::run_sweep(spec);
        else
            result = detail_cli::run_validate(spec);

        if (spec.format == "csv") {
            detail_cli::write_output(spec, result.csv);
        } else {
            json report;
            report["schemaVersion"] = 1;
            report["spec"] = spec_json(spec);
            report["results"] = result.results;
            report["metadata"] = json{{"timestamp", detail_cli::iso8601_utc_now()},
                                      {"wallTimeSeconds", detail::elapsed_seconds(t0)},
                                      {"jobs", spec.jobs}};
            detail_cli::write_output(spec, report.dump(2) + "\n");
        }
        if (result.exitCode != 0) {
            const json err = {{"error",
                               {{"exitCode", result.exitCode},
                                {"message", command + ": validation failed"}}}};
            std::cerr << err.dump(2) << '\n';
        }
        return result.exitCode;
    } catch (const invalid_input& e) {
        const json err = {{"error", {{"exitCode", 2}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << '\n';
        return 2;
    } catch (const std::exception& e) {
        const json err = {{"error", {{"exitCode", 3}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << '\n';
        return 3;
    }
}

inline int run(int argc, const char* const* argv) {
    return run(std::vector<std::string>(argv + 1, argv + argc));
}

} // namespace kerrsim::cli
