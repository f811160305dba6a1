#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "hdsys/scenario.hpp"

namespace fs = std::filesystem;
using namespace hdsys;
using scenario::Json;
using scenario::Scenario;

namespace {

struct RunContext {
    Scenario scen;
    fs::path out_dir;
    std::vector<std::string> manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    fs::path emit(const std::string& name) {
        manifest.push_back(name);
        return out_dir / name;
    }

    void write_json(const std::string& name, const Json& j) {
        std::ofstream out(emit(name));
        out << j.dump(2) << "\n";
    }

    void finish(const Json& extra) {
        Json rep;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(scenario::digest(scen)));
        rep["digest"] = std::string(buf);
        rep["seed"] = scen.seed;
        rep["wall_clock_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep["report"] = extra;
        Json files = Json::array();
        for (const auto& f : manifest) files.push_back(f);
        files.push_back("run_report.json");
        rep["manifest"] = files;
        std::ofstream out(out_dir / "run_report.json");
        out << rep.dump(2) << "\n";
    }
};

RunContext make_context(const std::string& config_path, const std::string& out_override,
                        std::uint64_t seed_override, bool have_seed,
                        const std::string& mode_override) {
    RunContext ctx{Scenario::load(config_path), {}, {}, std::chrono::steady_clock::now()};
    if (!out_override.empty()) ctx.scen.out_dir = out_override;
    if (have_seed) ctx.scen.seed = seed_override;
    if (!mode_override.empty()) {
        require(mode_override == "proof-faithful" || mode_override == "staggered",
                ErrorCode::config, "--mode must be proof-faithful or staggered");
        ctx.scen.solver.mode = mode_override == "staggered"
                                   ? SystemSolveConfig::Mode::staggered
                                   : SystemSolveConfig::Mode::proof_faithful;
    }
    ctx.out_dir = ctx.scen.out_dir;
    fs::create_directories(ctx.out_dir);
    return ctx;
}

SystemProblem build_system_any(const Scenario& s, const TimeGrid& grid) {
    if (s.kind == "abstract") return scenario::build_abstract(s, grid);
    if (s.kind == "dvhi") return build_system(scenario::build_dvhi(s), grid);
    return scenario::build_contact(s, grid).problem;
}

void append_probes(Json& probes, const SystemProblem& p, const TimeGrid& grid,
                   const ProbeSampler& mono, const ProbeSampler& hist) {
    probes.push_back(scenario::to_json(probe_mixed_monotonicity(p.opA, *p.V, *p.X, mono)));
    probes.push_back(scenario::to_json(probe_mixed_monotonicity(p.opB, *p.E, *p.V, *p.Q, mono)));
    if (p.potJ.subgrad)
        probes.push_back(
            scenario::to_json(probe_relaxed_monotonicity(p.potJ, *p.V, *p.X, *p.Z, mono)));
    if (p.potG.subgrad)
        probes.push_back(scenario::to_json(probe_relaxed_monotonicity(p.potG, *p.E, *p.V, mono)));
    for (const auto* op : {&p.histR, &p.histR1, &p.histR2, &p.histS})
        if (!op->is_zero())
            probes.push_back(scenario::to_json(probe_history_lipschitz(*op, *p.V, grid, hist)));
}

int cmd_check(RunContext& ctx) {
    const TimeGrid grid = ctx.scen.grid();
    ProbeSampler mono;
    mono.seed = ctx.scen.seed;
    mono.horizon = grid.horizon();
    ProbeSampler hist = mono;
    hist.pairs = 32;

    Json probes = Json::array();
    SmallnessReport gate;
    Json contact_gate;

    if (ctx.scen.kind == "contact") {
        contact::ContactAssembly as = scenario::build_contact(ctx.scen, grid);
        append_probes(probes, as.problem, grid, mono, hist);
        gate = as.problem.smallness();
        const contact::ContactGateReport cg = contact::check_contact_smallness(as);
        contact_gate["pass"] = cg.pass;
        contact_gate["margins"] = {cg.margin_mech, cg.margin_heat};
        contact_gate["trace_norm_V"] = as.fem.trace_norm_V;
        contact_gate["trace_norm_E"] = as.fem.trace_norm_E;
        if (!cg.pass) gate.pass = false;
    } else {
        const SystemProblem p = build_system_any(ctx.scen, grid);
        append_probes(probes, p, grid, mono, hist);
        gate = p.smallness();
    }

    bool all_pass = gate.pass;
    for (const auto& pr : probes) all_pass = all_pass && pr.at("pass").get<bool>();

    Json rep;
    rep["probes"] = probes;
    rep["smallness"] = scenario::to_json(gate);
    if (!contact_gate.is_null()) rep["contact_gate"] = contact_gate;
    rep["pass"] = all_pass;
    ctx.write_json("check_report.json", rep);
    std::cout << rep.dump(2) << "\n";
    ctx.finish(rep);
    return all_pass ? 0 : 2;
}

int cmd_solve(RunContext& ctx) {
    require(ctx.scen.kind == "abstract", ErrorCode::config,
            "solve expects an abstract scenario (use dvhi/contact otherwise)");
    const TimeGrid grid = ctx.scen.grid();
    const SystemProblem p = scenario::build_abstract(ctx.scen, grid);
    const SystemSolution sol = solve_system(p, grid, ctx.scen.solver);

    write_trajectory_csv(sol.w, ctx.emit("w.csv").string());
    write_trajectory_csv(sol.theta, ctx.emit("theta.csv").string());
    const Json diag = scenario::to_json(sol.diagnostics);
    ctx.write_json("diagnostics.json", diag);
    ctx.finish(diag);
    return 0;
}

int cmd_dvhi(RunContext& ctx) {
    require(ctx.scen.kind == "dvhi", ErrorCode::config, "dvhi expects a dvhi scenario");
    const TimeGrid grid = ctx.scen.grid();
    DvhiProblem q = scenario::build_dvhi(ctx.scen);
    const SystemProblem sys = build_system(q, grid);
    const DvhiSolution sol = solve_dvhi(q, grid, ctx.scen.solver);

    write_trajectory_csv(sol.u, ctx.emit("u.csv").string());
    write_trajectory_csv(sol.theta, ctx.emit("theta.csv").string());

    Json mapping;
    mapping["norm_M"] = q.norm_M;
    mapping["norm_Theta"] = q.norm_Theta;
    mapping["m_A"] = sys.opA.m;
    mapping["mbar_A"] = sys.opA.mbar;
    mapping["m_J"] = sys.potJ.m;
    mapping["mbar_J"] = sys.potJ.mbar;
    mapping["m_B"] = sys.opB.m;
    mapping["mbar_B"] = sys.opB.mbar;
    ctx.write_json("ledger_mapping.json", mapping);

    const auto slack = check_inequality_residual(q, sol.u, sol.theta, grid, 64, ctx.scen.seed);
    Json js;
    js["min_slack"] = slack.min_slack;
    js["max_theta_residual"] = slack.max_theta_residual;
    js["directions"] = slack.directions;
    js["nodes"] = slack.nodes;
    ctx.write_json("slack_report.json", js);

    Json diag = scenario::to_json(sol.diagnostics);
    diag["min_slack"] = slack.min_slack;
    ctx.write_json("diagnostics.json", diag);
    ctx.finish(diag);
    return 0;
}

int cmd_contact(RunContext& ctx) {
    require(ctx.scen.kind == "contact", ErrorCode::config, "contact expects a contact scenario");
    const TimeGrid grid = ctx.scen.grid();
    contact::ContactAssembly as = scenario::build_contact(ctx.scen, grid);
    const contact::ContactGateReport gate = contact::check_contact_smallness(as);
    const contact::ContactSolution sol = contact::solve_contact(as, grid, ctx.scen.solver);

    if (ctx.scen.wants("csv")) {
        write_trajectory_csv(sol.w, ctx.emit("w.csv").string());
        write_trajectory_csv(sol.u, ctx.emit("u.csv").string());
        write_trajectory_csv(sol.theta, ctx.emit("theta.csv").string());
    }
    int snap_id = 0;
    for (double t : ctx.scen.snapshot_times) {
        int k = static_cast<int>(std::llround(t / grid.dt()));
        k = std::clamp(k, 0, grid.steps());
        if (ctx.scen.wants("csv"))
            contact::write_fields_csv(
                as.fem, sol.u.values[k], sol.theta.values[k],
                ctx.emit("fields_" + std::to_string(snap_id) + ".csv").string());
        if (ctx.scen.wants("vtk"))
            contact::write_vtk_snapshot(
                as.fem, sol.u.values[k], sol.theta.values[k], sol.sigma[k],
                ctx.emit("snapshot_" + std::to_string(snap_id) + ".vtk").string());
        ++snap_id;
    }

    Json diag = scenario::to_json(sol.diagnostics);
    diag["contact_gate"] = {{"pass", gate.pass},
                            {"margins", {gate.margin_mech, gate.margin_heat}}};
    diag["trace_norm_V"] = as.fem.trace_norm_V;
    diag["trace_norm_E"] = as.fem.trace_norm_E;
    diag["max_penetration"] = sol.max_penetration;
    ctx.write_json("diagnostics.json", diag);
    ctx.finish(diag);
    return 0;
}

int cmd_convergence(RunContext& ctx, int jobs) {
    require(!ctx.scen.n_list.empty(), ErrorCode::config,
            "convergence requires an N_list in the scenario");
    std::vector<int> ns = ctx.scen.n_list;
    std::sort(ns.begin(), ns.end());
    const int n_fine = ns.back();

    std::vector<SystemSolution> sols(ns.size());
    std::vector<std::exception_ptr> errors(ns.size());
    auto worker = [&](size_t i) {
        try {
            const TimeGrid grid(ctx.scen.horizon, ns[i]);
            const SystemProblem p = build_system_any(ctx.scen, grid);
            sols[i] = solve_system(p, grid, ctx.scen.solver);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (jobs <= 1) {
        for (size_t i = 0; i < ns.size(); ++i) worker(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (size_t i = next++; i < ns.size(); i = next++) worker(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<std::string> wfiles, tfiles;
    for (size_t i = 0; i < ns.size(); ++i) {
        wfiles.push_back(ctx.emit("w_" + std::to_string(ns[i]) + ".csv").string());
        tfiles.push_back(ctx.emit("theta_" + std::to_string(ns[i]) + ".csv").string());
        write_trajectory_csv(sols[i].w, wfiles[i]);
        write_trajectory_csv(sols[i].theta, tfiles[i]);
    }

    // errors recomputed from the emitted files alone
    const SpacePtr Vspace = sols.back().w.space;
    const SpacePtr Espace = sols.back().theta.space;
    const Trajectory wf = read_trajectory_csv(Vspace, wfiles.back());
    const Trajectory tf = read_trajectory_csv(Espace, tfiles.back());

    std::vector<double> errs;
    for (size_t i = 0; i + 1 < ns.size(); ++i) {
        require(n_fine % ns[i] == 0, ErrorCode::config,
                "convergence: every N must divide the finest N");
        const Trajectory wi = read_trajectory_csv(Vspace, wfiles[i]);
        const Trajectory ti = read_trajectory_csv(Espace, tfiles[i]);
        const int stride = n_fine / ns[i];
        const double dt = ctx.scen.horizon / ns[i];
        double acc = 0.0;
        for (int k = 0; k < ns[i]; ++k) {
            const double nw = Vspace->norm_strong(wi.values[k] - wf.values[k * stride]);
            const double nt = Espace->norm_strong(ti.values[k] - tf.values[k * stride]);
            acc += dt * (nw * nw + nt * nt);
        }
        errs.push_back(std::sqrt(acc));
    }

    Json table = Json::array();
    std::FILE* f = std::fopen(ctx.emit("convergence.csv").string().c_str(), "w");
    require(f != nullptr, ErrorCode::config, "convergence: cannot open table for writing");
    std::fprintf(f, "N,error,order\n");
    std::printf("%8s %14s %8s\n", "N", "error", "order");
    for (size_t i = 0; i < errs.size(); ++i) {
        double order = std::numeric_limits<double>::quiet_NaN();
        // errors are measured against the finest run, so the order estimate
        // normalizes by the effective steps 1/N - 1/N_fine
        if (i + 1 < errs.size() && errs[i + 1] > 0.0) {
            const double h0 = 1.0 / ns[i] - 1.0 / n_fine;
            const double h1 = 1.0 / ns[i + 1] - 1.0 / n_fine;
            order = std::log2(errs[i] / errs[i + 1]) / std::log2(h0 / h1);
        }
        Json row;
        row["N"] = ns[i];
        row["error"] = errs[i];
        if (std::isfinite(order)) row["order"] = order;
        table.push_back(row);
        std::fprintf(f, "%d,%.17g,%.17g\n", ns[i], errs[i], order);
        std::printf("%8d %14.6e %8.3f\n", ns[i], errs[i], order);
    }
    std::fclose(f);
    Json rep;
    rep["table"] = table;
    ctx.write_json("convergence.json", rep);
    ctx.finish(rep);
    return 0;
}

int error_exit(const Error& e) {
    Json j;
    j["error"] = {{"code", e.code_name()}, {"message", e.what()}};
    std::cout << j.dump(2) << "\n";
    switch (e.code()) {
    case ErrorCode::gate_failure: return 2;
    case ErrorCode::non_convergence: return 3;
    default: return 4;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver for coupled history-dependent evolution inclusions"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config, out_dir, mode;
    std::uint64_t seed = 0;
    int jobs = 1;

    app.add_option("--config", config, "scenario file (JSON)")->required();
    app.add_option("--out", out_dir, "output directory override")->envname("HDSYS_OUT");
    auto* seed_opt = app.add_option("--seed", seed, "sampler seed override")->envname("HDSYS_SEED");
    app.add_option("--jobs", jobs, "parallel jobs for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--mode", mode, "proof-faithful | staggered");

    auto* c_check = app.add_subcommand("check", "probe hypotheses and smallness gates");
    auto* c_solve = app.add_subcommand("solve", "solve an abstract system scenario");
    auto* c_dvhi = app.add_subcommand("dvhi", "solve a differential VHI scenario");
    auto* c_contact = app.add_subcommand("contact", "solve a thermoviscoelastic contact scenario");
    auto* c_conv = app.add_subcommand("convergence", "temporal refinement sweep");

    CLI11_PARSE(app, argc, argv);
    const bool have_seed = seed_opt->count() > 0;

    try {
        RunContext ctx = make_context(config, out_dir, seed, have_seed, mode);
        if (c_check->parsed()) return cmd_check(ctx);
        if (c_solve->parsed()) return cmd_solve(ctx);
        if (c_dvhi->parsed()) return cmd_dvhi(ctx);
        if (c_contact->parsed()) return cmd_contact(ctx);
        if (c_conv->parsed()) return cmd_convergence(ctx, jobs);
        return 4;
    } catch (const NonConvergence& e) {
        return error_exit(e);
    } catch (const Error& e) {
        return error_exit(e);
    } catch (const std::exception& e) {
        Json j;
        j["error"] = {{"code", "internal"}, {"message", e.what()}};
        std::cout << j.dump(2) << "\n";
        return 4;
    }
}
