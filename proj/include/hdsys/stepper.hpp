#pragma once

#include <functional>

#include "hdsys/core.hpp"
#include "hdsys/operators.hpp"

namespace hdsys {

/// Data of a single evolution inclusion u' + A(t,u) + dpsi(t,u) ∋ f with
/// psi split into a convex part (prox access, frozen parameters) and a
/// Clarke part (selection access).
struct SingleInclusionProblem {
    SpacePtr space;

    std::function<Vec(double t, const Vec& u)> op; // A(t,.) -> dual vector
    double m_op = 0.0;                             // m_A > 0
    TimeFn a0;
    double a1 = 0.0; // Lipschitz-type growth slope, feeds the initial relaxation

    std::function<Vec(double t, double rho, const Vec& x)> convex_prox; // may be null
    std::function<Vec(double t, const Vec& u)> clarke;                  // may be null
    double m_clarke = 0.0;                                              // m_psi >= 0

    Trajectory load; // f at grid nodes (dual vectors)
    Vec initial;

    bool has_convex() const { return static_cast<bool>(convex_prox); }
    bool has_clarke() const { return static_cast<bool>(clarke); }
};

struct StepSolveConfig {
    double tol = 1e-10;
    int max_inner = 500;
    double relaxation = 0.0; // 0 = auto: 1/(mass_scale/dt + a1 envelope)
    double backtrack = 0.5;
    bool warm_start = true;  // start inner iteration from prev (else from zero)
};

struct StepStats {
    int inner_iterations = 0;
    double residual = 0.0;
};

/// Canonical certificate relaxation: deterministic in (problem, t, dt, cfg),
/// so reported residuals can be re-evaluated from a stored trajectory.
double step_certificate_rho(const SingleInclusionProblem& problem, double t, double dt,
                            const StepSolveConfig& cfg);

/// Residual of a candidate step value. Without a convex part this is the
/// Euclidean norm of
///   M_w (u - prev)/dt + A(t,u) + clarke(t,u) - f,
/// with one it is the prox-gradient residual |u - prox(rho; u - rho*F(u))|/rho
/// at the certificate relaxation.
double step_residual(const SingleInclusionProblem& problem, double t, const Vec& prev,
                     const Vec& u, const Vec& f, double dt, const StepSolveConfig& cfg);

/// One implicit-Euler step: solve the stationary inclusion at time t with
/// previous value prev by forward-backward splitting with backtracking.
/// `start` overrides the inner-iteration initial guess (warm start by prev
/// otherwise); the converged value does not depend on it.
Vec step_solve(double t, const Vec& prev, double dt, const SingleInclusionProblem& problem,
               const Vec& f, const StepSolveConfig& cfg, StepStats* stats = nullptr,
               const Vec* start = nullptr);

struct InclusionSolveReport {
    double max_residual = 0.0;
    int max_inner_iterations = 0;
    long total_inner_iterations = 0;
};

/// March the inclusion over the grid: values[0] = initial, values[k] from
/// step_solve at t_k. Gated on the margin m_op > m_clarke. A `start`
/// trajectory seeds the inner iterations nodewise (a pure speedup).
Trajectory solve_inclusion(const SingleInclusionProblem& problem, const TimeGrid& grid,
                           const StepSolveConfig& cfg, InclusionSolveReport* report = nullptr,
                           const Trajectory* start = nullptr);

} // namespace hdsys
