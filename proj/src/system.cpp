#include "hdsys/system.hpp"

#include <cmath>
#include <deque>

namespace hdsys {

namespace {

int node_index(const TimeGrid& grid, double t) {
    return static_cast<int>(std::llround(t / grid.dt()));
}

void validate_problem(const SystemProblem& p, const TimeGrid& grid) {
    require(p.V && p.E && p.X && p.Y && p.Z && p.Q, ErrorCode::config,
            "SystemProblem: missing spaces");
    require(p.w0.size() == p.V->dim(), ErrorCode::config, "SystemProblem: w0 dimension");
    require(p.theta0.size() == p.E->dim(), ErrorCode::config, "SystemProblem: theta0 dimension");
    require(p.X->dim() == p.E->dim(), ErrorCode::config,
            "SystemProblem: X must share the coefficient space of E");
    require(p.load1.grid == grid && p.load2.grid == grid, ErrorCode::config,
            "SystemProblem: load grids must match the solve grid");
    require(p.histR.target_space()->dim() == p.Y->dim(), ErrorCode::config,
            "SystemProblem: R must target Y");
    require(p.histR1.target_space()->dim() == p.V->dim(), ErrorCode::config,
            "SystemProblem: R1 must target V*");
    require(p.histR2.target_space()->dim() == p.Q->dim(), ErrorCode::config,
            "SystemProblem: R2 must target Q");
    require(p.histS.target_space()->dim() == p.Z->dim(), ErrorCode::config,
            "SystemProblem: S must target Z");
}

Trajectory rewrap(const Trajectory& traj, SpacePtr space) {
    return Trajectory(std::move(space), traj.grid, traj.values);
}

} // namespace

SpacePtr SystemProblem::dual_V() const {
    return V->dual("V*");
}

double SystemProblem::theta_stability_constant(double horizon) const {
    const double margin = opB.m - potG.m;
    require(margin > 0.0, ErrorCode::gate_failure, "theta_stability_constant: m_B - m_g must be positive");
    const double c2 = histR2.lipschitz_const();
    const double a = opB.mbar + potG.mbar;
    return (a * a + opB.mbar * opB.mbar * c2 * c2 * horizon * horizon) / margin;
}

double SystemProblem::default_bielecki_weight(double horizon) const {
    const double c1 = histR1.lipschitz_const();
    const double cr = histR.lipschitz_const();
    const double cs = histS.lipschitz_const();
    return 2.0 * (theta_stability_constant(horizon) + c1 * c1 + cr * cr + cs * cs) * horizon;
}

FrozenData FrozenData::initial(const SystemProblem& p, const TimeGrid& grid) {
    FrozenData x{Trajectory::constant(p.X, grid, p.theta0), Trajectory::zero(p.dual_V(), grid),
                 Trajectory::zero(p.Y, grid), Trajectory::zero(p.Z, grid)};
    return x;
}

FrozenData FrozenData::zero(const SystemProblem& p, const TimeGrid& grid) {
    return FrozenData{Trajectory::zero(p.X, grid), Trajectory::zero(p.dual_V(), grid),
                      Trajectory::zero(p.Y, grid), Trajectory::zero(p.Z, grid)};
}

FrozenData FrozenData::random(const SystemProblem& p, const TimeGrid& grid, std::uint64_t seed) {
    NormalStream rng(seed);
    FrozenData x = zero(p, grid);
    auto fill = [&rng](Trajectory& traj) {
        for (Vec& v : traj.values) v = rng.on_sphere(*traj.space, 1.0, 1.0);
    };
    fill(x.lambda);
    fill(x.xi);
    fill(x.eta);
    fill(x.zeta);
    return x;
}

double FrozenData::bielecki_norm(double weight) const {
    const double a = hdsys::bochner_norm(lambda, weight);
    const double b = hdsys::bochner_norm(xi, weight);
    const double c = hdsys::bochner_norm(eta, weight);
    const double d = hdsys::bochner_norm(zeta, weight);
    return std::sqrt(a * a + b * b + c * c + d * d);
}

FrozenData FrozenData::operator-(const FrozenData& other) const {
    return FrozenData{lambda - other.lambda, xi - other.xi, eta - other.eta, zeta - other.zeta};
}

Trajectory solve_frozen_w(const SystemProblem& problem, const FrozenData& frozen,
                          const TimeGrid& grid, const StepSolveConfig& cfg,
                          InclusionSolveReport* report, const Trajectory* start) {
    validate_problem(problem, grid);
    require(frozen.lambda.grid == grid, ErrorCode::config, "solve_frozen_w: frozen grid mismatch");

    SingleInclusionProblem inc;
    inc.space = problem.V;
    inc.op = [&problem, &frozen, grid](double t, const Vec& u) {
        const int k = node_index(grid, t);
        return problem.opA.eval(t, frozen.lambda.values[k], u);
    };
    inc.m_op = problem.opA.m;
    inc.a0 = problem.opA.a0;
    inc.a1 = problem.opA.a2 + problem.potJ.c3 + problem.potPhi.c3;
    if (problem.potJ.subgrad) {
        inc.clarke = [&problem, &frozen, grid](double t, const Vec& u) {
            const int k = node_index(grid, t);
            return problem.potJ.subgrad(t, frozen.lambda.values[k], frozen.zeta.values[k], u);
        };
        inc.m_clarke = problem.potJ.m;
    }
    if (problem.potPhi.present()) {
        inc.convex_prox = [&problem, &frozen, grid](double t, double rho, const Vec& x) {
            const int k = node_index(grid, t);
            return problem.potPhi.prox(t, frozen.lambda.values[k], frozen.eta.values[k], rho, x);
        };
    }
    inc.load = Trajectory(frozen.xi.space, grid);
    for (int k = 0; k <= grid.steps(); ++k)
        inc.load.values[k] = problem.load1.values[k] - frozen.xi.values[k];
    inc.initial = problem.w0;

    try {
        return solve_inclusion(inc, grid, cfg, report, start);
    } catch (const NonConvergence& e) {
        throw NonConvergence("frozen-w", e.node(), e.residual(), e.iterations());
    }
}

Trajectory solve_frozen_theta(const SystemProblem& problem, const Trajectory& w,
                              const TimeGrid& grid, const StepSolveConfig& cfg,
                              InclusionSolveReport* report, const Trajectory* start) {
    const Trajectory wbar = problem.histR2.eval_all(w);

    SingleInclusionProblem inc;
    inc.space = problem.E;
    inc.op = [&problem, &w, &wbar, grid](double t, const Vec& u) {
        const int k = node_index(grid, t);
        return problem.opB.eval(t, w.values[k], wbar.values[k], u);
    };
    inc.m_op = problem.opB.m;
    inc.a0 = problem.opB.b0;
    inc.a1 = problem.opB.b3 + problem.potG.c2;
    if (problem.potG.subgrad) {
        inc.clarke = [&problem, &w, grid](double t, const Vec& u) {
            const int k = node_index(grid, t);
            return problem.potG.subgrad(t, w.values[k], u);
        };
        inc.m_clarke = problem.potG.m;
    }
    inc.load = problem.load2;
    inc.initial = problem.theta0;

    try {
        return solve_inclusion(inc, grid, cfg, report, start);
    } catch (const NonConvergence& e) {
        throw NonConvergence("frozen-theta", e.node(), e.residual(), e.iterations());
    }
}

FrozenData apply_F(const SystemProblem& problem, const FrozenData& frozen, const TimeGrid& grid,
                   const StepSolveConfig& cfg, Trajectory* w_out, Trajectory* theta_out,
                   InclusionSolveReport* report, const Trajectory* w_start,
                   const Trajectory* theta_start) {
    InclusionSolveReport rep_w, rep_t;
    Trajectory w = solve_frozen_w(problem, frozen, grid, cfg, &rep_w, w_start);
    Trajectory theta = solve_frozen_theta(problem, w, grid, cfg, &rep_t, theta_start);

    FrozenData out{rewrap(theta, problem.X),
                   rewrap(problem.histR1.eval_all(w), frozen.xi.space),
                   rewrap(problem.histR.eval_all(w), problem.Y),
                   rewrap(problem.histS.eval_all(w), problem.Z)};
    if (w_out) *w_out = std::move(w);
    if (theta_out) *theta_out = std::move(theta);
    if (report) {
        report->max_residual = std::max(rep_w.max_residual, rep_t.max_residual);
        report->max_inner_iterations =
            std::max(rep_w.max_inner_iterations, rep_t.max_inner_iterations);
        report->total_inner_iterations =
            rep_w.total_inner_iterations + rep_t.total_inner_iterations;
    }
    return out;
}

namespace {

SystemSolution solve_proof_faithful(const SystemProblem& problem, const TimeGrid& grid,
                                    const SystemSolveConfig& cfg, const SmallnessReport& gate) {
    SolveDiagnostics diag;
    diag.margin1 = gate.margin1;
    diag.margin2 = gate.margin2;
    diag.thin_margin_warning = gate.warn_thin;
    diag.theta_stability_constant = problem.theta_stability_constant(grid.horizon());
    diag.bielecki_weight = cfg.bielecki_weight > 0.0
                               ? cfg.bielecki_weight
                               : problem.default_bielecki_weight(grid.horizon());

    FrozenData x = cfg.start ? *cfg.start : FrozenData::initial(problem, grid);
    double prev_inc = -1.0;
    bool converged = false;
    double inc = 0.0;
    Trajectory w_prev, theta_prev;

    for (int n = 0; n < cfg.max_picard; ++n) {
        InclusionSolveReport rep;
        Trajectory w_pass, theta_pass;
        FrozenData x_new =
            apply_F(problem, x, grid, cfg.step, &w_pass, &theta_pass, &rep,
                    n > 0 ? &w_prev : nullptr, n > 0 ? &theta_prev : nullptr);
        w_prev = std::move(w_pass);
        theta_prev = std::move(theta_pass);
        inc = (x_new - x).bielecki_norm(diag.bielecki_weight);
        const double scale = std::max(1.0, x.bielecki_norm(diag.bielecki_weight));
        diag.per_iteration_residuals.push_back(rep.max_residual);
        if (prev_inc > 0.0) diag.contraction_ratios.push_back(inc / prev_inc);
        prev_inc = inc;
        ++diag.picard_iters;
        x = std::move(x_new);
        if (inc <= cfg.picard_tol * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NonConvergence("solve_system (Picard)", -1, inc, diag.picard_iters);

    diag.final_increment = inc;
    SystemSolution sol{Trajectory::zero(problem.V, grid), Trajectory::zero(problem.E, grid),
                       diag};
    sol.w = solve_frozen_w(problem, x, grid, cfg.step, nullptr, &w_prev);
    sol.theta = solve_frozen_theta(problem, sol.w, grid, cfg.step, nullptr, &theta_prev);
    sol.diagnostics = diag;
    return sol;
}

SystemSolution solve_staggered(const SystemProblem& problem, const TimeGrid& grid,
                               const SystemSolveConfig& cfg, const SmallnessReport& gate) {
    SolveDiagnostics diag;
    diag.margin1 = gate.margin1;
    diag.margin2 = gate.margin2;
    diag.thin_margin_warning = gate.warn_thin;
    diag.theta_stability_constant = problem.theta_stability_constant(grid.horizon());
    diag.bielecki_weight = 0.0;
    diag.picard_iters = 1;

    Trajectory w(problem.V, grid), theta(problem.E, grid);
    w.values[0] = problem.w0;
    theta.values[0] = problem.theta0;

    const double dt = grid.dt();
    SpacePtr dualV = problem.dual_V();

    for (int k = 1; k <= grid.steps(); ++k) {
        const double t = grid.node(k);
        const Vec xi_k = problem.histR1.eval(w, k);
        const Vec eta_k = problem.histR.eval(w, k);
        const Vec zeta_k = problem.histS.eval(w, k);
        const Vec wbar_k = problem.histR2.eval(w, k);
        const Vec f1 = problem.load1.values[k] - xi_k;
        const Vec& f2 = problem.load2.values[k];

        SingleInclusionProblem incw;
        incw.space = problem.V;
        incw.m_op = problem.opA.m;
        incw.a0 = problem.opA.a0;
        incw.a1 = problem.opA.a2 + problem.potJ.c3 + problem.potPhi.c3;
        incw.m_clarke = problem.potJ.subgrad ? problem.potJ.m : 0.0;
        incw.load = Trajectory::zero(dualV, grid);
        incw.initial = problem.w0;

        SingleInclusionProblem inct;
        inct.space = problem.E;
        inct.m_op = problem.opB.m;
        inct.a0 = problem.opB.b0;
        inct.a1 = problem.opB.b3 + problem.potG.c2;
        inct.m_clarke = problem.potG.subgrad ? problem.potG.m : 0.0;
        inct.load = Trajectory::zero(problem.E, grid);
        inct.initial = problem.theta0;

        Vec theta_guess = theta.values[k - 1];
        Vec w_k = w.values[k - 1];
        const int max_coupling = 200;
        bool node_done = false;
        for (int it = 0; it < max_coupling; ++it) {
            const Vec theta_frozen = theta_guess;
            incw.op = [&problem, &theta_frozen](double tt, const Vec& u) {
                return problem.opA.eval(tt, theta_frozen, u);
            };
            if (problem.potJ.subgrad)
                incw.clarke = [&problem, &theta_frozen, &zeta_k](double tt, const Vec& u) {
                    return problem.potJ.subgrad(tt, theta_frozen, zeta_k, u);
                };
            if (problem.potPhi.present())
                incw.convex_prox = [&problem, &theta_frozen, &eta_k](double tt, double rho,
                                                                     const Vec& x) {
                    return problem.potPhi.prox(tt, theta_frozen, eta_k, rho, x);
                };
            const Vec w_prev_iter = w_k;
            w_k = step_solve(t, w.values[k - 1], dt, incw, f1, cfg.step);

            const Vec w_frozen = w_k;
            inct.op = [&problem, &w_frozen, &wbar_k](double tt, const Vec& u) {
                return problem.opB.eval(tt, w_frozen, wbar_k, u);
            };
            if (problem.potG.subgrad)
                inct.clarke = [&problem, &w_frozen](double tt, const Vec& u) {
                    return problem.potG.subgrad(tt, w_frozen, u);
                };
            const Vec theta_k = step_solve(t, theta.values[k - 1], dt, inct, f2, cfg.step);

            const double move = (theta_k - theta_guess).norm() + (w_k - w_prev_iter).norm();
            theta_guess = theta_k;
            if (move <= std::max(cfg.step.tol, 1e-14) * (1.0 + theta_k.norm() + w_k.norm())) {
                node_done = true;
                break;
            }
        }
        if (!node_done)
            throw NonConvergence("solve_system (staggered node coupling)", k, 0.0, max_coupling);
        w.values[k] = w_k;
        theta.values[k] = theta_guess;
    }
    return SystemSolution{std::move(w), std::move(theta), diag};
}

} // namespace

SystemSolution solve_system(const SystemProblem& problem, const TimeGrid& grid,
                            const SystemSolveConfig& cfg) {
    validate_problem(problem, grid);
    const SmallnessReport gate = problem.smallness();
    if (!gate.pass)
        throw Error(ErrorCode::gate_failure,
                    "solve_system: smallness condition m_A > m_J, m_B > m_g fails: margins (" +
                        std::to_string(gate.margin1) + ", " + std::to_string(gate.margin2) + ")");
    if (cfg.mode == SystemSolveConfig::Mode::staggered)
        return solve_staggered(problem, grid, cfg, gate);
    return solve_proof_faithful(problem, grid, cfg, gate);
}

SystemSolution solve_monolithic_oracle(const SystemProblem& problem, const TimeGrid& grid,
                                       const SystemSolveConfig& cfg) {
    validate_problem(problem, grid);
    const SmallnessReport gate = problem.smallness();
    if (!gate.pass)
        throw Error(ErrorCode::gate_failure, "solve_monolithic_oracle: smallness gate fails");

    constexpr double kOracleTol = 1e-12;
    const int max_inner = 200000;
    const double dt = grid.dt();

    Trajectory w(problem.V, grid), theta(problem.E, grid);
    w.values[0] = problem.w0;
    theta.values[0] = problem.theta0;

    const double mass_v = problem.V->weak_scale();
    const double mass_e = problem.E->weak_scale();
    const double hint_w = problem.opA.a2 + problem.potJ.c3 + problem.potPhi.c3;
    const double hint_t = problem.opB.b3 + problem.potG.c2;

    for (int k = 1; k <= grid.steps(); ++k) {
        const double t = grid.node(k);
        const Vec xi_k = problem.histR1.eval(w, k);
        const Vec eta_k = problem.histR.eval(w, k);
        const Vec zeta_k = problem.histS.eval(w, k);
        const Vec wbar_k = problem.histR2.eval(w, k);
        const Vec f1 = problem.load1.values[k] - xi_k;
        const Vec& f2 = problem.load2.values[k];
        const Vec& wp = w.values[k - 1];
        const Vec& tp = theta.values[k - 1];

        auto Fw = [&](const Vec& wk, const Vec& tk) {
            Vec F = problem.V->mass_apply((wk - wp) / dt);
            F += problem.opA.eval(t, tk, wk);
            if (problem.potJ.subgrad) F += problem.potJ.subgrad(t, tk, zeta_k, wk);
            F -= f1;
            return F;
        };
        auto Ft = [&](const Vec& wk, const Vec& tk) {
            Vec F = problem.E->mass_apply((tk - tp) / dt);
            F += problem.opB.eval(t, wk, wbar_k, tk);
            if (problem.potG.subgrad) F += problem.potG.subgrad(t, wk, tk);
            F -= f2;
            return F;
        };
        const double rho_res_w = 1.0 / (mass_v / dt + hint_w + 1e-12);
        auto residual = [&](const Vec& wk, const Vec& tk, const Vec& Fwv, const Vec& Ftv) {
            double rw;
            if (problem.potPhi.present()) {
                const Vec y = wk - rho_res_w * Fwv;
                const Vec pp = problem.potPhi.prox(t, tk, eta_k, rho_res_w, y);
                rw = (wk - pp).norm() / rho_res_w;
            } else {
                rw = Fwv.norm();
            }
            const double rt = Ftv.norm();
            return std::sqrt(rw * rw + rt * rt);
        };

        Vec wk = wp, tk = tp;
        double rho_w = rho_res_w;
        double rho_t = 1.0 / (mass_e / dt + hint_t + 1e-12);
        Vec Fwv = Fw(wk, tk), Ftv = Ft(wk, tk);
        double res = residual(wk, tk, Fwv, Ftv);

        // damped block-Jacobi base map, Anderson-extrapolated; every accepted
        // point is validated by the same residual, so the limit is unchanged
        const int nw = static_cast<int>(wk.size());
        const int nt = static_cast<int>(tk.size());
        auto base_step = [&](const Vec& wc, const Vec& tc, const Vec& Fwc, const Vec& Ftc) {
            Vec w_next = wc - rho_w * Fwc;
            if (problem.potPhi.present())
                w_next = problem.potPhi.prox(t, tc, eta_k, rho_w, w_next);
            Vec joint(nw + nt);
            joint.head(nw) = w_next;
            joint.tail(nt) = tc - rho_t * Ftc;
            return joint;
        };
        constexpr int kDepth = 5;
        std::deque<Vec> hist_u, hist_g;

        int it = 0;
        for (; it < max_inner && res > kOracleTol; ++it) {
            Vec joint(nw + nt);
            joint.head(nw) = wk;
            joint.tail(nt) = tk;
            const Vec fb = base_step(wk, tk, Fwv, Ftv);
            Vec w_next = fb.head(nw), t_next = fb.tail(nt);
            Vec Fw_next = Fw(w_next, t_next);
            Vec Ft_next = Ft(w_next, t_next);
            double res_next = residual(w_next, t_next, Fw_next, Ft_next);

            hist_u.push_back(joint);
            hist_g.push_back(fb - joint);
            while (static_cast<int>(hist_u.size()) > kDepth) {
                hist_u.pop_front();
                hist_g.pop_front();
            }
            const int m = static_cast<int>(hist_u.size());
            if (m >= 2) {
                Mat dG(nw + nt, m - 1), dU(nw + nt, m - 1);
                for (int j = 0; j + 1 < m; ++j) {
                    dG.col(j) = hist_g[j + 1] - hist_g[j];
                    dU.col(j) = hist_u[j + 1] - hist_u[j];
                }
                const Vec gamma = dG.colPivHouseholderQr().solve(hist_g.back());
                const Vec cand = hist_u.back() + hist_g.back() - (dU + dG) * gamma;
                if (cand.allFinite()) {
                    Vec wc = cand.head(nw), tc = cand.tail(nt);
                    Vec Fwc = Fw(wc, tc), Ftc = Ft(wc, tc);
                    const double rc = residual(wc, tc, Fwc, Ftc);
                    if (rc < res_next) {
                        w_next = std::move(wc);
                        t_next = std::move(tc);
                        Fw_next = std::move(Fwc);
                        Ft_next = std::move(Ftc);
                        res_next = rc;
                    }
                }
            }

            if (res_next < res || res_next <= kOracleTol) {
                wk = std::move(w_next);
                tk = std::move(t_next);
                Fwv = std::move(Fw_next);
                Ftv = std::move(Ft_next);
                res = res_next;
            } else {
                rho_w *= 0.5;
                rho_t *= 0.5;
                hist_u.clear();
                hist_g.clear();
                if (rho_w < 1e-16 * rho_res_w)
                    throw NonConvergence("solve_monolithic_oracle", k, res, it);
            }
        }
        if (res > kOracleTol) throw NonConvergence("solve_monolithic_oracle", k, res, it);
        w.values[k] = wk;
        theta.values[k] = tk;
    }

    SolveDiagnostics diag;
    const SmallnessReport g2 = problem.smallness();
    diag.margin1 = g2.margin1;
    diag.margin2 = g2.margin2;
    diag.theta_stability_constant = problem.theta_stability_constant(grid.horizon());
    diag.picard_iters = 0;
    (void)cfg;
    return SystemSolution{std::move(w), std::move(theta), diag};
}

DependenceReport verify_dependence_estimate(
    const SystemProblem& problem, const TimeGrid& grid,
    const std::vector<std::pair<FrozenData, FrozenData>>& pairs, const StepSolveConfig& cfg) {
    DependenceReport rep;
    const double dt = grid.dt();
    for (const auto& [fa, fb] : pairs) {
        const Trajectory wa = solve_frozen_w(problem, fa, grid, cfg);
        const Trajectory wb = solve_frozen_w(problem, fb, grid, cfg);
        double lhs2 = 0.0, dl2 = 0.0, dxi2 = 0.0, deta2 = 0.0, dzeta2 = 0.0;
        for (int k = 1; k <= grid.steps(); ++k) {
            const double nw = problem.V->norm_strong(wa.values[k] - wb.values[k]);
            lhs2 += dt * nw * nw;
            const double nl = problem.X->norm_strong(fa.lambda.values[k] - fb.lambda.values[k]);
            dl2 += dt * nl * nl;
            const double nx = problem.V->norm_dual(fa.xi.values[k] - fb.xi.values[k]);
            dxi2 += dt * nx * nx;
            const double ne = problem.Y->norm_strong(fa.eta.values[k] - fb.eta.values[k]);
            deta2 += dt * ne * ne;
            const double nz = problem.Z->norm_strong(fa.zeta.values[k] - fb.zeta.values[k]);
            dzeta2 += dt * nz * nz;
            const double denom =
                std::sqrt(dl2) + std::sqrt(dxi2) + std::sqrt(deta2) + std::sqrt(dzeta2);
            if (denom <= 1e-13) continue;
            const double fitted = std::sqrt(lhs2) / denom;
            if (!std::isfinite(fitted)) rep.finite = false;
            rep.max_fitted_c = std::max(rep.max_fitted_c, fitted);
        }
        ++rep.pairs;
    }
    return rep;
}

double dependence_constant_bound(const SystemProblem& problem) {
    const double margin = problem.opA.m - problem.potJ.m;
    require(margin > 0.0, ErrorCode::gate_failure,
            "dependence_constant_bound: the margin m_A - m_J must be positive");
    const double lead = problem.opA.mbar + problem.potPhi.m + problem.potJ.mbar;
    return std::max({lead, problem.potPhi.m, problem.potJ.mbar, 1.0}) / margin;
}

} // namespace hdsys
