#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#ifndef HDSYS_CLI_PATH
#define HDSYS_CLI_PATH "hdsys"
#endif
#ifndef HDSYS_SCENARIO_DIR
#define HDSYS_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HDSYS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

fs::path scenario(const std::string& name) {
    return fs::path(HDSYS_SCENARIO_DIR) / name;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("hdsys_cli_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("cli: check passes on the benchmark and reports probes") {
    const fs::path out = fresh_dir("check");
    const int code = run_cli("check --config " + scenario("benchmark.json").string() + " --out " +
                             out.string());
    CHECK(code == 0);
    const json rep = json::parse(slurp(out / "check_report.json"));
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("probes").size() >= 6);
    const json run = json::parse(slurp(out / "run_report.json"));
    CHECK(run.at("manifest").size() >= 2);
    CHECK(run.at("digest").get<std::string>().size() == 16);
}

TEST_CASE("cli: smallness violation exits with code 2 before iterating") {
    const fs::path out = fresh_dir("gate");
    const int code = run_cli("solve --config " + scenario("gate_violation.json").string() +
                             " --out " + out.string());
    CHECK(code == 2);
    CHECK_FALSE(fs::exists(out / "w.csv")); // rejected before producing trajectories
}

TEST_CASE("cli: malformed configs produce structured errors and exit 4") {
    const fs::path out = fresh_dir("bad");
    const fs::path cfg = out / "bad.json";

    for (const std::string body :
         {std::string("{ not json"),
          std::string(R"({"schema_version":1,"kind":"nope","grid":{"T":1,"N":4}})"),
          std::string(R"({"schema_version":1,"kind":"abstract","grid":{"T":-1,"N":4}})"),
          std::string(
              R"({"schema_version":1,"kind":"abstract","grid":{"T":1,"N":4},"problem":{"builtin":"missing"}})")}) {
        std::ofstream(cfg) << body;
        const std::string cmd = std::string(HDSYS_CLI_PATH) + " solve --config " + cfg.string() +
                                " --out " + out.string() + " > " + (out / "log.json").string() +
                                " 2>/dev/null";
        const int code = WEXITSTATUS(std::system(cmd.c_str()));
        CHECK(code == 4);
        const json err = json::parse(slurp(out / "log.json"));
        CHECK(err.contains("error"));
        CHECK(err.at("error").contains("code"));
    }
}

TEST_CASE("cli: zero-data scenario solves to zero in one pass") {
    const fs::path out = fresh_dir("zero");
    const fs::path cfg = out / "zero.json";
    std::ofstream(cfg) << R"({"schema_version":1,"kind":"abstract","grid":{"T":1.0,"N":16},
        "problem":{"builtin":"custom","dims":{"V":1,"E":1},
        "A":{"Av":[[1.0]]},"B":{"Btheta":[[1.0]]}}})";
    REQUIRE(run_cli("solve --config " + cfg.string() + " --out " + out.string()) == 0);
    const json diag = json::parse(slurp(out / "diagnostics.json"));
    CHECK(diag.at("picard_iters").get<int>() == 1);
    std::stringstream ss(slurp(out / "w.csv"));
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line))
        CHECK(std::stod(line.substr(line.find(',') + 1)) == 0.0);
}

TEST_CASE("cli: exhausted Picard budget exits with code 3") {
    const fs::path out = fresh_dir("nonconv");
    const fs::path cfg = out / "one_pass.json";
    std::ofstream(cfg) << R"({"schema_version":1,"kind":"abstract","grid":{"T":1.0,"N":16},
        "solver":{"max_picard":1},
        "problem":{"builtin":"benchmark","margin":0.5}})";
    CHECK(run_cli("solve --config " + cfg.string() + " --out " + out.string()) == 3);
}

TEST_CASE("cli: identical config and seed give byte-identical outputs") {
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    REQUIRE(run_cli("solve --config " + scenario("benchmark.json").string() + " --seed 99 --out " +
                    a.string()) == 0);
    REQUIRE(run_cli("solve --config " + scenario("benchmark.json").string() + " --seed 99 --out " +
                    b.string()) == 0);
    CHECK(slurp(a / "w.csv") == slurp(b / "w.csv"));
    CHECK(slurp(a / "theta.csv") == slurp(b / "theta.csv"));
    CHECK(slurp(a / "diagnostics.json") == slurp(b / "diagnostics.json"));
}

TEST_CASE("cli: convergence table is self-contained and first order") {
    const fs::path out = fresh_dir("conv");
    REQUIRE(run_cli("convergence --config " + scenario("manufactured_convergence.json").string() +
                    " --jobs 1 --out " + out.string()) == 0);
    const json rep = json::parse(slurp(out / "convergence.json"));
    const auto table = rep.at("table");
    REQUIRE(table.size() == 4);
    for (const auto& row : table)
        if (row.contains("order")) {
            CHECK(row.at("order").get<double>() >= 0.8);
            CHECK(row.at("order").get<double>() <= 1.2);
        }

    // recompute the error column from the emitted trajectory files alone
    auto parse_csv = [](const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
            rows.push_back(row);
        }
        return rows;
    };
    const auto wf = parse_csv(out / "w_512.csv");
    const auto tf = parse_csv(out / "theta_512.csv");
    for (const auto& row : table) {
        const int N = row.at("N").get<int>();
        const auto wi = parse_csv(out / ("w_" + std::to_string(N) + ".csv"));
        const auto ti = parse_csv(out / ("theta_" + std::to_string(N) + ".csv"));
        const int stride = 512 / N;
        double acc = 0.0;
        for (int k = 0; k < N; ++k) {
            const double dw = wi[k][1] - wf[k * stride][1];
            const double dth = ti[k][1] - tf[k * stride][1];
            acc += (1.0 / N) * (dw * dw + dth * dth);
        }
        CHECK(std::sqrt(acc) == doctest::Approx(row.at("error").get<double>()).epsilon(1e-12));
    }
}

TEST_CASE("cli: staggered mode flag is honored") {
    const fs::path a = fresh_dir("mode_a");
    const fs::path b = fresh_dir("mode_b");
    REQUIRE(run_cli("solve --config " + scenario("benchmark.json").string() +
                    " --mode proof-faithful --out " + a.string()) == 0);
    REQUIRE(run_cli("solve --config " + scenario("benchmark.json").string() +
                    " --mode staggered --out " + b.string()) == 0);
    // different algorithms, same discrete solution to tolerance
    auto first_w = [](const std::string& text) {
        std::stringstream ss(text);
        std::string line;
        std::getline(ss, line);
        double last = 0.0;
        while (std::getline(ss, line)) last = std::stod(line.substr(line.find(',') + 1));
        return last;
    };
    CHECK(first_w(slurp(a / "w.csv")) == doctest::Approx(first_w(slurp(b / "w.csv"))).epsilon(1e-6));
}
