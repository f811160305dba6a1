#include "hdsys/stepper.hpp"

#include <cmath>
#include <deque>

namespace hdsys {

namespace {

// Forward part of the splitting: M_w (u - prev)/dt + A(t,u) + clarke(t,u) - f.
Vec forward_eval(const SingleInclusionProblem& p, double t, const Vec& prev, const Vec& u,
                 const Vec& f, double dt) {
    Vec F = p.space->mass_apply((u - prev) / dt);
    F += p.op(t, u);
    if (p.has_clarke()) F += p.clarke(t, u);
    F -= f;
    return F;
}

double residual_from_forward(const SingleInclusionProblem& p, double t, const Vec& u,
                             const Vec& F, double rho_res) {
    if (!p.has_convex()) return F.norm();
    const Vec y = u - rho_res * F;
    const Vec pp = p.convex_prox(t, rho_res, y);
    return (u - pp).norm() / rho_res;
}

} // namespace

double step_certificate_rho(const SingleInclusionProblem& problem, double t, double dt,
                            const StepSolveConfig& cfg) {
    (void)t;
    if (cfg.relaxation > 0.0) return cfg.relaxation;
    const double mass = std::max(problem.space->weak_scale(), 1e-300);
    return 1.0 / (mass / dt + problem.a1 + 1e-12);
}

double step_residual(const SingleInclusionProblem& problem, double t, const Vec& prev,
                     const Vec& u, const Vec& f, double dt, const StepSolveConfig& cfg) {
    const Vec F = forward_eval(problem, t, prev, u, f, dt);
    return residual_from_forward(problem, t, u, F, step_certificate_rho(problem, t, dt, cfg));
}

Vec step_solve(double t, const Vec& prev, double dt, const SingleInclusionProblem& problem,
               const Vec& f, const StepSolveConfig& cfg, StepStats* stats, const Vec* start) {
    require_arg(problem.m_op > problem.m_clarke,
                "step_solve: smallness margin m_A - m_psi must be positive");
    require_arg(cfg.tol > 0.0, "step_solve: tol must be positive");
    require_arg(cfg.backtrack > 0.0 && cfg.backtrack < 1.0,
                "step_solve: backtrack factor must lie in (0,1)");

    const double rho_res = step_certificate_rho(problem, t, dt, cfg);
    double rho = rho_res;

    Vec u = start ? *start : (cfg.warm_start ? prev : Vec(Vec::Zero(prev.size())));
    Vec Fu = forward_eval(problem, t, prev, u, f, dt);
    double res = residual_from_forward(problem, t, u, Fu, rho_res);

    // Anderson acceleration buffers over the base map T(u) = prox(u - rho*F(u)).
    constexpr int kAndersonDepth = 5;
    std::deque<Vec> hist_u, hist_g; // g = T(u) - u

    auto base_step = [&](const Vec& ucur, const Vec& Fcur) -> Vec {
        const Vec y = ucur - rho * Fcur;
        return problem.has_convex() ? problem.convex_prox(t, rho, y) : y;
    };

    int it = 0;
    for (; it < cfg.max_inner; ++it) {
        if (res <= cfg.tol) break;

        const Vec u_fb = base_step(u, Fu);
        Vec F_fb = forward_eval(problem, t, prev, u_fb, f, dt);
        double res_fb = residual_from_forward(problem, t, u_fb, F_fb, rho_res);

        // Anderson candidate: least-squares combination of recent base steps.
        Vec u_next = u_fb;
        Vec F_next = std::move(F_fb);
        double res_next = res_fb;
        hist_u.push_back(u);
        hist_g.push_back(u_fb - u);
        while (static_cast<int>(hist_u.size()) > kAndersonDepth) {
            hist_u.pop_front();
            hist_g.pop_front();
        }
        const int m = static_cast<int>(hist_u.size());
        if (m >= 2) {
            Mat dG(u.size(), m - 1);
            Mat dU(u.size(), m - 1);
            for (int j = 0; j + 1 < m; ++j) {
                dG.col(j) = hist_g[j + 1] - hist_g[j];
                dU.col(j) = hist_u[j + 1] - hist_u[j];
            }
            const Vec gamma = dG.colPivHouseholderQr().solve(hist_g.back());
            Vec u_aa = hist_u.back() + hist_g.back() - (dU + dG) * gamma;
            if (u_aa.allFinite()) {
                Vec F_aa = forward_eval(problem, t, prev, u_aa, f, dt);
                const double res_aa = residual_from_forward(problem, t, u_aa, F_aa, rho_res);
                if (res_aa < res_next) {
                    u_next = std::move(u_aa);
                    F_next = std::move(F_aa);
                    res_next = res_aa;
                }
            }
        }

        if (res_next < res || res_next <= cfg.tol) {
            u = std::move(u_next);
            Fu = std::move(F_next);
            res = res_next;
        } else {
            // Residual grew: shrink the relaxation and restart the history.
            rho *= cfg.backtrack;
            hist_u.clear();
            hist_g.clear();
            if (rho < 1e-16 * rho_res)
                throw NonConvergence("step_solve (relaxation underflow)", -1, res, it);
        }
    }

    if (res > cfg.tol) throw NonConvergence("step_solve", -1, res, it);
    if (stats) {
        stats->inner_iterations = it;
        stats->residual = res;
    }
    return u;
}

Trajectory solve_inclusion(const SingleInclusionProblem& problem, const TimeGrid& grid,
                           const StepSolveConfig& cfg, InclusionSolveReport* report,
                           const Trajectory* start) {
    require(problem.m_op > problem.m_clarke, ErrorCode::gate_failure,
            "solve_inclusion: smallness condition m_A > m_psi fails (margin " +
                std::to_string(problem.m_op - problem.m_clarke) + ")");
    require_arg(problem.initial.size() == problem.space->dim(),
                "solve_inclusion: initial value dimension mismatch");
    require_arg(problem.load.grid == grid, "solve_inclusion: load grid mismatch");
    require_arg(!start || start->grid == grid, "solve_inclusion: start grid mismatch");

    Trajectory traj(problem.space, grid);
    traj.values[0] = problem.initial;
    InclusionSolveReport rep;
    for (int k = 1; k <= grid.steps(); ++k) {
        StepStats stats;
        try {
            traj.values[k] = step_solve(grid.node(k), traj.values[k - 1], grid.dt(), problem,
                                        problem.load.values[k], cfg, &stats,
                                        start ? &start->values[k] : nullptr);
        } catch (const NonConvergence& e) {
            throw NonConvergence("solve_inclusion", k, e.residual(), e.iterations());
        }
        rep.max_residual = std::max(rep.max_residual, stats.residual);
        rep.max_inner_iterations = std::max(rep.max_inner_iterations, stats.inner_iterations);
        rep.total_inner_iterations += stats.inner_iterations;
    }
    if (report) *report = rep;
    return traj;
}

} // namespace hdsys
