#pragma once

#include <optional>

#include "hdsys/core.hpp"
#include "hdsys/operators.hpp"
#include "hdsys/probes.hpp"
#include "hdsys/stepper.hpp"

namespace hdsys {

/// The full data bundle of the coupled two-inclusion system:
///   w' + A(t,th,w) + R1 w + dJ(t,th,Sw,w) + d_c phi(t,th,Rw,w) ∋ h1,
///   th' + B(t,w,R2 w,th) + dg(t,w,th) ∋ h2,  w(0)=w0, th(0)=th0.
struct SystemProblem {
    SpacePtr V, H, E, X, Y, Z, Q;

    OperatorFamilyA opA;
    ClarkePotentialJ potJ;
    ConvexPotentialPhi potPhi = ConvexPotentialPhi::none();
    OperatorFamilyB opB;
    ClarkePotentialG potG;

    HistoryOperator histR;  // -> Y
    HistoryOperator histR1; // -> V* (dual coefficients)
    HistoryOperator histR2; // -> Q
    HistoryOperator histS;  // -> Z

    Trajectory load1; // h1 in V*
    Trajectory load2; // h2 in E*
    Vec w0;
    Vec theta0;

    /// Dual space of V (strong Gram = inverse); solvers build it once per run.
    SpacePtr dual_V() const;

    /// Smallness gate on the declared ledger.
    SmallnessReport smallness() const {
        return check_smallness(opA.m, potJ.m, opB.m, potG.m);
    }

    /// Analytic constant bounding the theta-dependence on w:
    ///   c = ((mbar_B + mbar_g)^2 + mbar_B^2 c_R2^2 T^2) / (m_B - m_g).
    double theta_stability_constant(double horizon) const;

    /// Default Bielecki weight 2 (c_theta + c_R1^2 + c_R^2 + c_S^2) T.
    double default_bielecki_weight(double horizon) const;
};

/// The frozen quadruple (lambda, xi, eta, zeta) iterated by the map F.
struct FrozenData {
    Trajectory lambda; // in X
    Trajectory xi;     // in V*
    Trajectory eta;    // in Y
    Trajectory zeta;   // in Z

    static FrozenData initial(const SystemProblem& p, const TimeGrid& grid);
    static FrozenData zero(const SystemProblem& p, const TimeGrid& grid);
    static FrozenData random(const SystemProblem& p, const TimeGrid& grid, std::uint64_t seed);

    /// Product-space Bielecki norm: unweighted Euclidean sum of squared
    /// component norms under a common exponential weight.
    double bielecki_norm(double weight) const;

    FrozenData operator-(const FrozenData& other) const;
};

struct SystemSolveConfig {
    StepSolveConfig step;
    double picard_tol = 1e-10;
    int max_picard = 200;
    double bielecki_weight = 0.0; // 0 = ledger default
    enum class Mode { proof_faithful, staggered } mode = Mode::proof_faithful;
    std::optional<FrozenData> start; // Picard start override (proof-faithful mode)
};

struct SolveDiagnostics {
    int picard_iters = 0;
    std::vector<double> contraction_ratios;
    double bielecki_weight = 0.0;
    double final_increment = 0.0;
    std::vector<double> per_iteration_residuals;
    double theta_stability_constant = 0.0;
    double margin1 = 0.0;
    double margin2 = 0.0;
    bool thin_margin_warning = false;
};

/// Frozen-w solve: the single inclusion with A(t, lambda(t), .),
/// Clarke part dJ(t, lambda(t), zeta(t), .), convex part
/// phi(t, lambda(t), eta(t), .), load h1 - xi, initial w0.
Trajectory solve_frozen_w(const SystemProblem& problem, const FrozenData& frozen,
                          const TimeGrid& grid, const StepSolveConfig& cfg,
                          InclusionSolveReport* report = nullptr,
                          const Trajectory* start = nullptr);

/// Frozen-theta solve: computes wbar = R2 w, then steps
/// th' + B(t, w(t), wbar(t), .) + dg(t, w(t), .) ∋ h2 from theta0.
Trajectory solve_frozen_theta(const SystemProblem& problem, const Trajectory& w,
                              const TimeGrid& grid, const StepSolveConfig& cfg,
                              InclusionSolveReport* report = nullptr,
                              const Trajectory* start = nullptr);

/// One pass of the fixed-point map: F(l,xi,eta,zeta) = (theta, R1 w, R w, S w).
/// The optional starts seed the inner iterations (previous pass's pair).
FrozenData apply_F(const SystemProblem& problem, const FrozenData& frozen, const TimeGrid& grid,
                   const StepSolveConfig& cfg, Trajectory* w_out = nullptr,
                   Trajectory* theta_out = nullptr, InclusionSolveReport* report = nullptr,
                   const Trajectory* w_start = nullptr, const Trajectory* theta_start = nullptr);

struct SystemSolution {
    Trajectory w;
    Trajectory theta;
    SolveDiagnostics diagnostics;
};

/// Picard iteration on the frozen data until the weighted increment drops
/// below tol * max(1, |x|); returns the final frozen solve pair.
SystemSolution solve_system(const SystemProblem& problem, const TimeGrid& grid,
                            const SystemSolveConfig& cfg);

/// Independent brute-force reference: per node, solve the fully coupled
/// two-block stationary inclusion (history frozen from previous nodes) by a
/// damped block-Jacobi fixed point to residual 1e-12.
SystemSolution solve_monolithic_oracle(const SystemProblem& problem, const TimeGrid& grid,
                                       const SystemSolveConfig& cfg);

struct DependenceReport {
    double max_fitted_c = 0.0;
    bool finite = true;
    int pairs = 0;
};

/// Empirical check of the frozen-data dependence estimate: for each pair,
/// solve frozen-w twice and fit c in
///   ||w1 - w2||_{L2(0,t;V)} <= c (||dl|| + ||dxi|| + ||deta|| + ||dzeta||)_{L2(0,t)}.
DependenceReport verify_dependence_estimate(const SystemProblem& problem, const TimeGrid& grid,
                                            const std::vector<std::pair<FrozenData, FrozenData>>& pairs,
                                            const StepSolveConfig& cfg);

/// Ledger-derived analytic bound for the fitted dependence constant.
double dependence_constant_bound(const SystemProblem& problem);

} // namespace hdsys
