#include <catch2/catch.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmwc/cli.hpp"

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = pmwc::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string shortest(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

const std::vector<std::string> kThirdOrderPlant{"--num", "1", "--den", "1", "3", "3", "1"};

std::vector<std::string> with_plant(std::vector<std::string> args,
                                    const std::vector<std::string>& plant = kThirdOrderPlant) {
    args.insert(args.end(), plant.begin(), plant.end());
    return args;
}

}  // namespace

TEST_CASE("tune emits the info struct as JSON", "[cli]") {
    const CliRun r = run_cli(with_plant({"tune", "--pm", "60", "--wc", "1"}));
    REQUIRE(r.code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    for (const char* key : {"Kp", "Ki", "Kd", "PM", "wc", "IAE", "Stable", "converged", "iterations"})
        REQUIRE(j.contains(key));
    CHECK(j["Kp"].get<double>() == Approx(2.732).margin(0.01));
    CHECK(j["Ki"].get<double>() == Approx(1.171).margin(0.01));
    CHECK(j["Kd"].get<double>() == Approx(1.903).margin(0.01));
    CHECK(j["Stable"].get<bool>());
    CHECK(j["converged"].get<bool>());
}

TEST_CASE("the first-order tune reports kd exactly zero", "[cli]") {
    const CliRun r = run_cli({"tune", "--num", "1", "--den", "1", "1", "--pm", "60", "--wc", "1"});
    REQUIRE(r.code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j["Kd"].get<double>() == 0.0);
}

TEST_CASE("a static plant is rejected as infeasible", "[cli]") {
    const CliRun r = run_cli({"tune", "--num", "1", "--den", "1", "--pm", "60", "--wc", "1"});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("verify reproduces the published reference rows", "[cli]") {
    const CliRun r = run_cli({"verify", "--num", "1", "--den", "1", "2", "1", "--kp", "1.873",
                              "--ki", "1.336", "--kd", "0.634"});
    REQUIRE(r.code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j["PM"].get<double>() == Approx(69.44).margin(0.1));
    CHECK(j["wc"].get<double>() == Approx(1.0).margin(1e-3));
    CHECK(j["IAE"].get<double>() == Approx(1.0131).margin(0.01));
    CHECK(j["Stable"].get<bool>());
    CHECK(j["crossing_count"].get<int>() >= 1);
}

TEST_CASE("verify flags a loop with no crossover", "[cli]") {
    const CliRun r = run_cli(with_plant({"verify", "--kp", "0", "--ki", "0", "--kd", "0"}));
    CHECK(r.code == 2);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j["crossing_count"].get<int>() == 0);
    CHECK(j["PM"].is_null());
    CHECK(r.err.find("no gain crossover") != std::string::npos);
}

TEST_CASE("bench passes and prints both methods", "[cli]") {
    const CliRun r = run_cli({"bench"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("pmwc-tune") != std::string::npos);
    CHECK(r.out.find("pidtune-reference") != std::string::npos);
    CHECK(r.out.find("60.00") != std::string::npos);
}

TEST_CASE("bench output is deterministic byte for byte", "[cli]") {
    const CliRun a = run_cli({"bench", "--format", "csv"});
    const CliRun b = run_cli({"bench", "--format", "csv"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("bench csv carries the table header", "[cli]") {
    const CliRun r = run_cli({"bench", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("plant,method,kp,ki,kd,pm_deg,wc_rad_s,iae,stable\n", 0) == 0);
    CHECK(count_lines(r.out) == 7);  // header + 6 rows
}

TEST_CASE("csv payloads are plain comma-separated numbers", "[cli]") {
    const CliRun bench = run_cli({"bench", "--format", "csv"});
    REQUIRE(bench.code == 0);
    std::istringstream rows(bench.out);
    std::string line;
    while (std::getline(rows, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 8);
        CHECK(line.find(' ') == std::string::npos);
    }

    const CliRun step = run_cli(with_plant({"step", "--kp", "1", "--ki", "1", "--kd", "0"}));
    std::istringstream samples(step.out);
    while (std::getline(samples, line)) CHECK(std::count(line.begin(), line.end(), ',') == 2);
}

TEST_CASE("bench json is an array of six rows", "[cli]") {
    const CliRun r = run_cli({"bench", "--format", "json"});
    REQUIRE(r.code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 6);
    CHECK(j[0]["method"] == "pmwc-tune");
    CHECK(j[1]["method"] == "pidtune-reference");
    for (const auto& row : j)
        for (const char* key : {"plant", "method", "kp", "ki", "kd", "pm_deg", "wc_rad_s", "iae", "stable"})
            REQUIRE(row.contains(key));
}

TEST_CASE("step emits t,y,e rows and summary metrics", "[cli]") {
    const CliRun r = run_cli(with_plant({"step", "--kp", "2.732", "--ki", "1.171", "--kd", "1.903"}));
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("t,y,e\n", 0) == 0);
    CHECK(count_lines(r.out) == 2002);  // header + 2001 samples
    CHECK(r.err.find("settling_time_s=") != std::string::npos);
    CHECK(r.err.find("overshoot_pct=") != std::string::npos);
}

TEST_CASE("step on an unstable loop still emits data but exits 2", "[cli]") {
    const CliRun r = run_cli(with_plant({"step", "--kp", "100", "--ki", "200", "--kd", "0"}));
    CHECK(r.code == 2);
    CHECK(r.out.rfind("t,y,e\n", 0) == 0);
    CHECK(count_lines(r.out) == 2002);
    CHECK(r.err.find("not stable") != std::string::npos);
}

TEST_CASE("bode emits the frequency grid", "[cli]") {
    const CliRun r = run_cli(with_plant({"bode", "--kp", "2.732", "--ki", "1.171", "--kd", "1.903",
                                         "--w-min", "0.1", "--w-max", "10", "--points-per-decade",
                                         "100"}));
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("w_rad_s,mag_db,phase_deg\n", 0) == 0);
    CHECK(count_lines(r.out) == 202);  // header + 201 samples over two decades
    CHECK(r.out.find("\n0.1,") != std::string::npos);
}

TEST_CASE("tuned JSON round-trips through verify", "[cli]") {
    const CliRun tuned = run_cli({"tune", "--num", "1", "--den", "1", "2", "1"});
    REQUIRE(tuned.code == 0);
    const nlohmann::json jt = nlohmann::json::parse(tuned.out);

    const CliRun verified = run_cli({"verify", "--num", "1", "--den", "1", "2", "1", "--kp",
                                     shortest(jt["Kp"].get<double>()), "--ki",
                                     shortest(jt["Ki"].get<double>()), "--kd",
                                     shortest(jt["Kd"].get<double>())});
    REQUIRE(verified.code == 0);
    const nlohmann::json jv = nlohmann::json::parse(verified.out);
    CHECK(std::abs(jv["PM"].get<double>() - jt["PM"].get<double>()) <= 1e-4);
    CHECK(std::abs(jv["wc"].get<double>() - jt["wc"].get<double>()) <= 1e-4);
    CHECK(std::abs(jv["IAE"].get<double>() - jt["IAE"].get<double>()) <= 1e-4);
}

TEST_CASE("plant files substitute for coefficient flags", "[cli]") {
    const std::string path = "/tmp/pmwc_cli_plant.json";
    {
        std::ofstream f(path);
        f << R"({"num": [1], "den": [1, 3, 3, 1]})";
    }
    const CliRun from_file = run_cli({"tune", "--plant-file", path});
    const CliRun from_flags = run_cli(with_plant({"tune"}));
    REQUIRE(from_file.code == 0);
    CHECK(from_file.out == from_flags.out);
    std::remove(path.c_str());
}

TEST_CASE("payload can be routed to a file", "[cli]") {
    const std::string path = "/tmp/pmwc_cli_out.json";
    const CliRun r = run_cli(with_plant({"tune", "--out", path}));
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream f(path);
    REQUIRE(f.good());
    const nlohmann::json j = nlohmann::json::parse(f);
    CHECK(j["converged"].get<bool>());
    std::remove(path.c_str());
}

TEST_CASE("usage errors exit with code 1", "[cli]") {
    CHECK(run_cli({"tune", "--no-such-flag"}).code == 1);
    CHECK(run_cli({"tune"}).code == 1);                                   // no plant
    CHECK(run_cli({"frobnicate"}).code == 1);                             // unknown subcommand
    CHECK(run_cli(with_plant({"tune", "--plant-file", "/tmp/x.json"})).code == 1);  // both sources
    CHECK(run_cli({"tune", "--num", "1", "0", "0", "--den", "1", "1"}).code == 1);  // improper
    CHECK(run_cli({"tune", "--num", "1", "--den", "1", "1", "--dt", "0.013"}).code == 1);
}

TEST_CASE("help is printed on request", "[cli]") {
    const CliRun r = run_cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("tune") != std::string::npos);
    CHECK(r.out.find("bench") != std::string::npos);
}
