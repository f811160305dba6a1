#include "hdsys/scenario.hpp"

#include <fstream>

namespace hdsys::scenario {

namespace {

Mat parse_matrix(const Json& j) {
    if (j.is_null()) return Mat();
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return Mat();
    Mat m(rows.size(), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r) {
        require(rows[r].size() == rows[0].size(), ErrorCode::config,
                "scenario: ragged matrix literal");
        for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

Vec parse_vector(const Json& j) {
    const auto vals = j.get<std::vector<double>>();
    Vec v(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) v[static_cast<int>(i)] = vals[i];
    return v;
}

Mat rect_scaled_identity(int rows, int cols, double scale) {
    Mat m = Mat::Zero(rows, cols);
    for (int i = 0; i < std::min(rows, cols); ++i) m(i, i) = scale;
    return m;
}

HistoryOperator parse_history(const Json& j, SpacePtr target, int vdim) {
    const std::string kind = j.value("kind", "zero");
    const double scale = j.value("scale", 0.0);
    const Mat base = j.contains("base") ? parse_matrix(j.at("base"))
                                        : rect_scaled_identity(target->dim(), vdim, scale);
    if (kind == "zero") return HistoryOperator::zero(std::move(target));
    if (kind == "volterra_exp")
        return builtins::volterra_exp(std::move(target), base, j.value("decay", 0.0));
    if (kind == "accumulate") return builtins::accumulate_linear(std::move(target), base);
    if (kind == "integral_of_map") {
        const double lip = base.size() == 0 ? 0.0 : base.operatorNorm();
        return HistoryOperator::integral_of_map(
            std::move(target), [base](const Vec& v) { return Vec(base * v); }, lip);
    }
    throw Error(ErrorCode::config, "scenario: unknown history kind '" + kind + "'");
}

contact::PolyXT parse_poly_xt(const Json& j) {
    contact::PolyXT p;
    if (j.is_null()) return p;
    if (j.is_number()) return contact::PolyXT(j.get<double>());
    for (const auto& term : j) {
        require(term.is_array() && term.size() == 4, ErrorCode::config,
                "scenario: poly term must be [c, px, py, pt]");
        p.terms.push_back({term[0].get<double>(), term[1].get<int>(), term[2].get<int>(),
                           term[3].get<int>()});
    }
    return p;
}

} // namespace

bool Scenario::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

Scenario Scenario::parse(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::config, std::string("scenario parse error: ") + e.what());
    }
    try {
        Scenario s;
        s.raw = j;
        s.schema_version = j.value("schema_version", 1);
        require(s.schema_version == 1, ErrorCode::config,
                "scenario: unsupported schema_version");
        s.kind = j.at("kind").get<std::string>();
        require(s.kind == "abstract" || s.kind == "dvhi" || s.kind == "contact",
                ErrorCode::config, "scenario: kind must be abstract, dvhi or contact");
        const Json& g = j.at("grid");
        s.horizon = g.at("T").get<double>();
        s.steps = g.at("N").get<int>();
        require(std::isfinite(s.horizon) && s.horizon > 0.0 && s.steps >= 1, ErrorCode::config,
                "scenario: grid must have T > 0 and N >= 1");
        if (j.contains("solver")) {
            const Json& sv = j.at("solver");
            s.solver.picard_tol = sv.value("tol", s.solver.picard_tol);
            s.solver.max_picard = sv.value("max_picard", s.solver.max_picard);
            s.solver.bielecki_weight = sv.value("bielecki_weight", 0.0);
            s.solver.step.tol = sv.value("step_tol", s.solver.step.tol);
            s.solver.step.max_inner = sv.value("max_inner", s.solver.step.max_inner);
            const std::string mode = sv.value("mode", "proof-faithful");
            require(mode == "proof-faithful" || mode == "staggered", ErrorCode::config,
                    "scenario: mode must be proof-faithful or staggered");
            s.solver.mode = mode == "staggered" ? SystemSolveConfig::Mode::staggered
                                                : SystemSolveConfig::Mode::proof_faithful;
        }
        s.seed = j.value("seed", s.seed);
        if (j.contains("outputs")) {
            s.out_dir = j.at("outputs").value("directory", s.out_dir);
            if (j.at("outputs").contains("formats"))
                s.formats = j.at("outputs").at("formats").get<std::vector<std::string>>();
        }
        if (j.contains("N_list")) s.n_list = j.at("N_list").get<std::vector<int>>();
        if (j.contains("snapshot_times"))
            s.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
        s.problem = j.value("problem", Json::object());
        for (double v : s.snapshot_times)
            require(std::isfinite(v), ErrorCode::config, "scenario: non-finite snapshot time");
        return s;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::config, std::string("scenario: ") + e.what());
    }
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::config, "scenario: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

std::uint64_t digest(const Scenario& s) {
    const std::string text = s.raw.dump() + "#" + std::to_string(s.seed);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

SystemProblem build_abstract(const Scenario& s, const TimeGrid& grid) {
    const Json& p = s.problem;
    const std::string builtin = p.value("builtin", "custom");
    if (builtin == "linear_decay") return builtins::linear_decay_problem(grid);
    if (builtin == "manufactured") return builtins::manufactured_problem(grid);
    if (builtin == "benchmark")
        return builtins::benchmark_problem(p.value("margin", 0.5), grid);
    if (builtin == "linear_estimate") return builtins::linear_estimate_instance(grid);
    if (builtin == "random")
        return builtins::random_instance(p.value("instance_seed", s.seed), grid,
                                         p.value("max_dim", 8), p.value("min_margin", 0.25));
    require(builtin == "custom", ErrorCode::config,
            "scenario: unknown abstract builtin '" + builtin + "'");

    try {
        const Json& dims = p.at("dims");
        const int dV = dims.at("V").get<int>();
        const int dE = dims.at("E").get<int>();
        const int dY = dims.value("Y", 1);
        const int dZ = dims.value("Z", 1);
        const int dQ = dims.value("Q", 1);

        SystemProblem sys;
        sys.V = DiscreteSpace::euclidean(dV, "V");
        sys.H = DiscreteSpace::euclidean(dV, "H");
        sys.E = DiscreteSpace::euclidean(dE, "E");
        sys.X = DiscreteSpace::euclidean(dE, "X");
        sys.Y = DiscreteSpace::euclidean(dY, "Y");
        sys.Z = DiscreteSpace::euclidean(dZ, "Z");
        sys.Q = DiscreteSpace::euclidean(dQ, "Q");

        sys.opA = builtins::linear_A(parse_matrix(p.at("A").at("Av")),
                                     p.at("A").contains("Atheta")
                                         ? parse_matrix(p.at("A").at("Atheta"))
                                         : Mat());
        if (p.contains("J"))
            sys.potJ = builtins::linear_relaxed_J(
                p.at("J").value("kappa", 0.0),
                p.at("J").contains("Ctheta") ? parse_matrix(p.at("J").at("Ctheta")) : Mat(),
                p.at("J").contains("Cz") ? parse_matrix(p.at("J").at("Cz")) : Mat());
        if (p.contains("phi")) {
            const Json& ph = p.at("phi");
            const std::string kind = ph.value("kind", "weighted_l1");
            if (kind == "weighted_l1")
                sys.potPhi = builtins::weighted_l1_phi(ph.value("w0", 0.0),
                                                       ph.value("wtheta", 0.0),
                                                       ph.value("wy", 0.0), dV);
            else if (kind == "quadratic")
                sys.potPhi = builtins::quadratic_phi(ph.value("alpha", 1.0));
            else
                throw Error(ErrorCode::config, "scenario: unknown phi kind '" + kind + "'");
        }
        sys.opB = builtins::linear_B(
            parse_matrix(p.at("B").at("Btheta")),
            p.at("B").contains("Cw") ? parse_matrix(p.at("B").at("Cw")) : Mat(),
            p.at("B").contains("Cwbar") ? parse_matrix(p.at("B").at("Cwbar")) : Mat());
        if (p.contains("g"))
            sys.potG = builtins::linear_relaxed_g(
                p.at("g").value("kappa", 0.0),
                p.at("g").contains("Cw") ? parse_matrix(p.at("g").at("Cw")) : Mat());

        sys.histR = parse_history(p.value("R", Json::object()), sys.Y, dV);
        sys.histR1 = parse_history(p.value("R1", Json::object()), sys.V->dual("V*"), dV);
        sys.histR2 = parse_history(p.value("R2", Json::object()), sys.Q, dV);
        sys.histS = parse_history(p.value("S", Json::object()), sys.Z, dV);

        auto load_coeffs = [](const Json& jj, int dim) {
            std::vector<std::vector<double>> c(static_cast<size_t>(dim));
            if (!jj.is_null()) c = jj.get<std::vector<std::vector<double>>>();
            require(static_cast<int>(c.size()) == dim, ErrorCode::config,
                    "scenario: load coefficient count mismatch");
            return c;
        };
        sys.load1 = builtins::polynomial_trajectory(sys.V->dual("V*"), grid,
                                                    load_coeffs(p.value("h1", Json()), dV));
        sys.load2 = builtins::polynomial_trajectory(sys.E->dual("E*"), grid,
                                                    load_coeffs(p.value("h2", Json()), dE));
        sys.w0 = p.contains("w0") ? parse_vector(p.at("w0")) : Vec(Vec::Zero(dV));
        sys.theta0 = p.contains("theta0") ? parse_vector(p.at("theta0")) : Vec(Vec::Zero(dE));
        require(sys.w0.allFinite() && sys.theta0.allFinite(), ErrorCode::config,
                "scenario: initial values must be finite");
        return sys;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::config, std::string("scenario (abstract): ") + e.what());
    }
}

DvhiProblem build_dvhi(const Scenario& s) {
    const Json& p = s.problem;
    const std::string builtin = p.value("builtin", "benchmark");
    require(builtin == "benchmark", ErrorCode::config,
            "scenario: unknown dvhi builtin '" + builtin + "'");
    return builtins::dvhi_benchmark(p.value("smooth", false));
}

contact::ContactAssembly build_contact(const Scenario& s, const TimeGrid& grid) {
    const Json& p = s.problem;
    try {
        const Json& jm = p.at("mesh");
        contact::Mesh2D mesh = contact::Mesh2D::rectangle(
            jm.at("Lx").get<double>(), jm.at("Ly").get<double>(), jm.at("nx").get<int>(),
            jm.at("ny").get<int>());

        contact::MaterialLaw mat;
        if (p.contains("material")) {
            const Json& m = p.at("material");
            mat.mu_v = m.value("mu_v", mat.mu_v);
            mat.lambda_v = m.value("lambda_v", mat.lambda_v);
            mat.mu_e = m.value("mu_e", mat.mu_e);
            mat.lambda_e = m.value("lambda_e", mat.lambda_e);
            mat.relax_c = m.value("relax_c", mat.relax_c);
            mat.relax_tau = m.value("relax_tau", mat.relax_tau);
            mat.c_e = m.value("c_e", mat.c_e);
            mat.kappa = m.value("kappa", mat.kappa);
            mat.source_n1 = m.value("source_n1", mat.source_n1);
            mat.source_n2 = m.value("source_n2", mat.source_n2);
            require(mat.mu_v > 0.0 && mat.kappa > 0.0 && mat.relax_tau > 0.0, ErrorCode::config,
                    "scenario: material moduli must be positive");
        }

        contact::ContactLaw law;
        if (p.contains("contact")) {
            const Json& c = p.at("contact");
            law.jnu_s0 = c.value("jnu_s0", law.jnu_s0);
            law.jnu_s1 = c.value("jnu_s1", law.jnu_s1);
            law.jnu_s2 = c.value("jnu_s2", law.jnu_s2);
            law.k1 = c.value("k1", law.k1);
            law.k2 = c.value("k2", law.k2);
            law.k_theta = c.value("k_theta", law.k_theta);
            law.k_r = c.value("k_r", law.k_r);
            law.fb0 = c.value("fb0", law.fb0);
            law.fb1 = c.value("fb1", law.fb1);
            law.fb2 = c.value("fb2", law.fb2);
            law.j_lin = c.value("j_lin", law.j_lin);
            law.j_dip = c.value("j_dip", law.j_dip);
            law.ht0 = c.value("ht0", law.ht0);
            law.ht1 = c.value("ht1", law.ht1);
            require(0.0 < law.k1 && law.k1 <= law.k2, ErrorCode::config,
                    "scenario: damper bounds must satisfy 0 < k1 <= k2");
        }

        contact::ContactLoads loads;
        if (p.contains("loads")) {
            const Json& l = p.at("loads");
            loads.f0x = parse_poly_xt(l.value("f0x", Json()));
            loads.f0y = parse_poly_xt(l.value("f0y", Json()));
            loads.fNx = parse_poly_xt(l.value("fNx", Json()));
            loads.fNy = parse_poly_xt(l.value("fNy", Json()));
            loads.h0 = parse_poly_xt(l.value("h0", Json()));
        }
        contact::ContactInitial init;
        if (p.contains("initial")) {
            const Json& i = p.at("initial");
            init.u0x = parse_poly_xt(i.value("u0x", Json()));
            init.u0y = parse_poly_xt(i.value("u0y", Json()));
            init.w0x = parse_poly_xt(i.value("w0x", Json()));
            init.w0y = parse_poly_xt(i.value("w0y", Json()));
            init.theta0 = parse_poly_xt(i.value("theta0", Json()));
        }
        return contact::assemble_problem(mesh, mat, law, loads, init, grid);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::config, std::string("scenario (contact): ") + e.what());
    }
}

Json to_json(const ProbeReport& rep) {
    Json j;
    j["target"] = rep.target;
    j["samples"] = rep.samples;
    j["estimated_constant"] = rep.estimated_constant;
    j["declared_constant"] = rep.declared_constant;
    j["estimate_kind"] = "empirical";
    j["worst_t"] = rep.worst_t;
    j["worst_pair"] = {std::vector<double>(rep.worst_a.begin(), rep.worst_a.end()),
                       std::vector<double>(rep.worst_b.begin(), rep.worst_b.end())};
    j["pass"] = rep.pass;
    return j;
}

Json to_json(const SolveDiagnostics& diag) {
    Json j;
    j["picard_iters"] = diag.picard_iters;
    j["contraction_ratios"] = diag.contraction_ratios;
    j["bielecki_weight"] = diag.bielecki_weight;
    j["final_increment"] = diag.final_increment;
    j["per_iteration_residuals"] = diag.per_iteration_residuals;
    j["theta_stability_constant"] = diag.theta_stability_constant;
    j["margins"] = {diag.margin1, diag.margin2};
    j["thin_margin_warning"] = diag.thin_margin_warning;
    return j;
}

Json to_json(const SmallnessReport& rep) {
    Json j;
    j["pass"] = rep.pass;
    j["margins"] = {rep.margin1, rep.margin2};
    j["thin_margin_warning"] = rep.warn_thin;
    return j;
}

} // namespace hdsys::scenario
