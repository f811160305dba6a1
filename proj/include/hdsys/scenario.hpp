#pragma once

#include <json.hpp>

#include "hdsys/builtins.hpp"
#include "hdsys/contact.hpp"

namespace hdsys::scenario {

using Json = nlohmann::json;

/// One parsed scenario file: grid, solver knobs, output policy and the
/// kind-specific problem block (interpreted by the builders below).
struct Scenario {
    int schema_version = 1;
    std::string kind; // abstract | dvhi | contact
    double horizon = 1.0;
    int steps = 64;
    SystemSolveConfig solver;
    std::uint64_t seed = 20240901;
    std::string out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
    std::vector<int> n_list;             // convergence sweeps
    std::vector<double> snapshot_times;  // contact exports
    Json problem;
    Json raw;

    TimeGrid grid() const { return TimeGrid(horizon, steps); }
    bool wants(const std::string& format) const;

    static Scenario load(const std::string& path);
    static Scenario parse(const std::string& text);
};

/// FNV-1a digest of the canonical scenario text plus the effective seed.
std::uint64_t digest(const Scenario& s);

SystemProblem build_abstract(const Scenario& s, const TimeGrid& grid);
DvhiProblem build_dvhi(const Scenario& s);
contact::ContactAssembly build_contact(const Scenario& s, const TimeGrid& grid);

/// Serialization helpers shared by the CLI.
Json to_json(const ProbeReport& rep);
Json to_json(const SolveDiagnostics& diag);
Json to_json(const SmallnessReport& rep);

} // namespace hdsys::scenario
