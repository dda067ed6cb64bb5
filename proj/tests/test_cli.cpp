#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kerrsim/cli.hpp"

using namespace kerrsim;
using json = nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

json run_to_json(std::vector<std::string> args, const std::string& path, int expectExit = 0) {
    args.push_back("--out");
    args.push_back(path);
    const int code = cli::run(args);
    REQUIRE(code == expectExit);
    const json report = json::parse(slurp(path));
    std::remove(path.c_str());
    return report;
}

} // namespace

TEST_CASE("trial counts accept scientific notation") {
    CHECK(cli::detail_cli::parse_trials("100") == 100);
    CHECK(cli::detail_cli::parse_trials("1e5") == 100000);
    CHECK(cli::detail_cli::parse_trials("2.5e3") == 2500);
    CHECK(cli::detail_cli::parse_trials("1e12") == 1000000000000ULL);
    CHECK_THROWS_AS(cli::detail_cli::parse_trials("10.5"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_trials("0"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_trials("2e12"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_trials("abc"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_trials("100x"), invalid_input);
}

TEST_CASE("theta accepts values, lists and inclusive ranges") {
    const auto range = cli::detail_cli::parse_theta_values("0.05:0.5:0.05");
    REQUIRE(range.size() == 10);
    CHECK(range.front() == Catch::Approx(0.05));
    CHECK(range.back() == Catch::Approx(0.5));

    const auto single = cli::detail_cli::parse_theta_values("0.3");
    REQUIRE(single.size() == 1);
    CHECK(single[0] == 0.3);

    const auto list = cli::detail_cli::parse_theta_values("0.1,0.2,0.3");
    REQUIRE(list.size() == 3);
    CHECK(list[1] == 0.2);

    CHECK_THROWS_AS(cli::detail_cli::parse_theta_values("0.5:0.1:0.1"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_theta_values("0.1:0.5"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_theta_values("0.1:0.5:0"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_theta_values("0"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_theta_values("1.6"), invalid_input);
    CHECK_THROWS_AS(cli::detail_cli::parse_theta_values("zebra"), invalid_input);
}

TEST_CASE("input descriptors cover the token alphabet") {
    CHECK_FALSE(cli::detail_cli::parse_qubit_token("H").isVac);
    CHECK(cli::detail_cli::parse_qubit_token("VAC").isVac);
    const auto qs = cli::detail_cli::parse_input_state("H,V,D,A,R,L");
    CHECK(qs.size() == 6);
    CHECK_THROWS_AS(cli::detail_cli::parse_qubit_token("Q"), invalid_input);

    CHECK(cli::detail_cli::parse_bell_label("phi+") == BellLabel::PhiPlus);
    CHECK(cli::detail_cli::parse_bell_label("bell:psi-") == BellLabel::PsiMinus);
    CHECK_THROWS_AS(cli::detail_cli::parse_bell_label("phi"), invalid_input);
}

TEST_CASE("detector reports carry the schema and honor the jobs knob") {
    const std::vector<std::string> base = {"detector", "--alpha", "30",   "--theta", "0.1",
                                           "--trials", "2048",     "--seed", "9"};
    auto args1 = base;
    args1.push_back("--jobs");
    args1.push_back("1");
    auto args4 = base;
    args4.push_back("--jobs");
    args4.push_back("4");

    json r1 = run_to_json(args1, "cli_det_1.json");
    json r4 = run_to_json(args4, "cli_det_4.json");

    CHECK(r1.at("schemaVersion") == 1);
    CHECK(r1.at("spec").at("command") == "detector");
    CHECK(r1.at("spec").at("alpha") == 30.0);
    CHECK(r1.at("spec").at("theta") == 0.1);
    CHECK(r1.at("spec").at("trials") == 2048);
    CHECK(r1.at("spec").at("seed") == 9);
    CHECK(r1.at("metadata").at("jobs") == 1);
    CHECK(r4.at("metadata").at("jobs") == 4);
    CHECK(r1.at("results").at("monteCarlo").at("wilson95").size() == 2);

    // numeric payload is independent of the worker count
    r1.erase("metadata");
    r4.erase("metadata");
    // the spec echoes the output path, which differs by construction
    r1.at("spec").erase("out");
    r4.at("spec").erase("out");
    CHECK(r1.dump() == r4.dump());
}

TEST_CASE("identical invocations produce byte-identical payloads") {
    const std::vector<std::string> args = {"detector", "--alpha", "30",  "--theta", "0.1",
                                           "--trials", "2048",    "--seed", "9",   "--out",
                                           "cli_rerun.json"};
    REQUIRE(cli::run(args) == 0);
    json a = json::parse(slurp("cli_rerun.json"));
    REQUIRE(cli::run(args) == 0);
    json b = json::parse(slurp("cli_rerun.json"));
    std::remove("cli_rerun.json");
    a.erase("metadata");
    b.erase("metadata");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("config files merge beneath command line flags") {
    spit("cli_cfg.json",
         R"({"alpha": 50.0, "theta": 0.2, "trials": 1000, "seed": 3, "noise-sigma": 0.5})");
    const json r = run_to_json(
        {"detector", "--config", "cli_cfg.json", "--alpha", "60"}, "cli_cfg_out.json");
    CHECK(r.at("spec").at("alpha") == 60.0);
    CHECK(r.at("spec").at("theta") == 0.2);
    CHECK(r.at("spec").at("trials") == 1000);
    CHECK(r.at("spec").at("seed") == 3);
    CHECK(r.at("spec").at("noiseSigma") == 0.5);
    std::remove("cli_cfg.json");

    spit("cli_cfg_bad.json", R"({"alfa": 50.0})");
    CHECK(cli::run({"detector", "--config", "cli_cfg_bad.json"}) == 2);
    std::remove("cli_cfg_bad.json");

    spit("cli_cfg_junk.json", "{ not json");
    CHECK(cli::run({"detector", "--config", "cli_cfg_junk.json"}) == 2);
    std::remove("cli_cfg_junk.json");

    CHECK(cli::run({"detector", "--config", "cli_cfg_missing.json"}) == 2);
}

TEST_CASE("seed falls back to the environment") {
    REQUIRE(setenv("KERRSIM_SEED", "777", 1) == 0);
    const json env = run_to_json({"detector", "--alpha", "30", "--theta", "0.1", "--trials",
                                  "1024"},
                                 "cli_env.json");
    CHECK(env.at("spec").at("seed") == 777);

    const json flag = run_to_json({"detector", "--alpha", "30", "--theta", "0.1", "--trials",
                                   "1024", "--seed", "5"},
                                  "cli_env_flag.json");
    CHECK(flag.at("spec").at("seed") == 5);

    spit("cli_cfg_seed.json", R"({"seed": 3})");
    const json cfg = run_to_json({"detector", "--alpha", "30", "--theta", "0.1", "--trials",
                                  "1024", "--config", "cli_cfg_seed.json"},
                                 "cli_env_cfg.json");
    CHECK(cfg.at("spec").at("seed") == 3);
    std::remove("cli_cfg_seed.json");

    REQUIRE(setenv("KERRSIM_SEED", "12abc", 1) == 0);
    CHECK(cli::run({"detector", "--alpha", "30", "--theta", "0.1", "--trials", "64"}) == 2);
    REQUIRE(unsetenv("KERRSIM_SEED") == 0);
}

TEST_CASE("sweep emits a deterministic resource table") {
    const std::vector<std::string> args = {"sweep",       "--theta", "0.05:0.5:0.05",
                                           "--target-xd", "8",       "--format",
                                           "csv",         "--out",   "cli_sweep.csv"};
    REQUIRE(cli::run(args) == 0);
    const std::string first = slurp("cli_sweep.csv");
    REQUIRE(cli::run(args) == 0);
    CHECK(first == slurp("cli_sweep.csv")); // byte identical reruns
    std::remove("cli_sweep.csv");

    std::istringstream in(first);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "theta,alpha,photonNumber,pErrParity");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    REQUIRE(rows.size() == 10);

    // the theta = 0.3 row carries the calibrated amplitude
    std::istringstream row(rows[5]);
    std::string cell;
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == Catch::Approx(0.3).epsilon(1e-12));
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == Catch::Approx(89.55856630369017).epsilon(1e-9));

    const json j = run_to_json({"sweep", "--theta", "0.05:0.5:0.05", "--target-xd", "8"},
                               "cli_sweep.json");
    CHECK(j.at("spec").at("theta") == "0.05:0.5:0.05");
    CHECK(j.at("spec").at("targetXd") == 8.0);
    CHECK(j.at("results").at("rows").size() == 10);
}

TEST_CASE("validate passes on the oracle corpus") {
    const json r = run_to_json({"validate", "--alpha", "2", "--theta", "0.5"}, "cli_val.json");
    CHECK(r.at("results").at("pass") == true);
    CHECK(r.at("results").at("maxDensityLinf").get<double>() <= 1e-8);
    CHECK(r.at("results").at("rows").size() == 13);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(cli::run({"detector", "--theta", "9", "--out", "cli_unwritten.json"}) == 2);
    CHECK(cli::run({"bogus"}) == 2);
    CHECK(cli::run({}) == 2);
    CHECK(cli::run({"detector", "--jobs", "0", "--out", "cli_unwritten.json"}) == 2);
    CHECK(cli::run({"detector", "--format", "yaml", "--out", "cli_unwritten.json"}) == 2);
    CHECK(cli::run({"--help"}) == 0);
    CHECK(cli::run({"--version"}) == 0);
}

TEST_CASE("bell command tallies a prepared input") {
    const json r = run_to_json({"bell", "--input", "phi+", "--trials", "512", "--seed", "5"},
                               "cli_bell.json");
    const auto& res = r.at("results");
    CHECK(res.at("input") == "phi+");
    const auto& counts = res.at("counts");
    REQUIRE(counts.size() == 4);
    std::uint64_t sum = 0;
    for (const auto& c : counts) sum += c.get<std::uint64_t>();
    CHECK(sum == 512);
    CHECK(counts[0].get<std::uint64_t>() == 512); // misidentification odds ~4e-6
    CHECK(res.at("meanFidelity").get<double>() > 1.0 - 1e-4);
}

TEST_CASE("cnot command measures a basis input against the ideal map") {
    const json r = run_to_json({"cnot", "--input", "H,V", "--trials", "256", "--seed", "2"},
                               "cli_cnot.json");
    const auto& fid = r.at("results").at("fidelity");
    CHECK(fid.at("trials") == 256);
    CHECK(fid.at("mean").get<double>() > 1.0 - 1e-4);
    CHECK(fid.at("min").get<double>() > 0.99);

    CHECK(cli::run({"cnot", "--input", "H", "--out", "cli_unwritten.json"}) == 2);
    // a vacuum target trips the ideal-map validation up front
    CHECK(cli::run({"cnot", "--input", "V,VAC", "--out", "cli_unwritten.json"}) == 2);
    // with an H control the vacuum only surfaces inside a trial: runtime failure
    CHECK(cli::run({"cnot", "--input", "H,VAC", "--out", "cli_unwritten.json"}) == 3);
}

TEST_CASE("csv detector output starts with its header") {
    REQUIRE(cli::run({"detector", "--alpha", "30", "--theta", "0.1", "--trials", "512",
                      "--seed", "4", "--format", "csv", "--out", "cli_det.csv"}) == 0);
    const std::string text = slurp("cli_det.csv");
    std::remove("cli_det.csv");
    CHECK(text.rfind("trials,errors,errorRate,wilsonLow,wilsonHigh,analyticErrorRate\n", 0) == 0);
}
