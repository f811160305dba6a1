#pragma once

#include "hdsys/system.hpp"

namespace hdsys {

/// Data of the evolutionary differential variational-hemivariational
/// inequality: a parabolic variational-hemivariational inequality for u
/// driven by a nonlinear evolution equation for theta.
struct DvhiProblem {
    SpacePtr V, E, X; // X shares the coefficient space of E (weak leg)
    SpacePtr X0, Y0;

    std::function<Vec(double t, const Vec& u)> opAbar; // V -> V*
    double m_Abar = 0.0;
    TimeFn abar0;
    double abar1 = 0.0;

    // Clarke potential G(t, theta, x0) on X0, via a selection of dG.
    std::function<Vec(double t, const Vec& theta, const Vec& x0)> subgradG;
    std::function<double(double t, const Vec& theta, const Vec& x0, const Vec& dir)>
        dirderiv_upperG; // optional exact G^0 upper bound (tests only)
    TimeFn c0G;
    double c1G = 0.0, c2G = 0.0;
    double m_G = 0.0, mbar_G = 0.0;

    Mat mapM;     // V -> X0
    Mat mapTheta; // H -> Y0
    double norm_M = -1.0;     // operator norm; computed by finalize() when negative
    double norm_Theta = -1.0;

    ConvexPotentialPhi potPhi = ConvexPotentialPhi::none(); // y-slot unused

    std::function<Vec(double t, const Vec& theta)> rhsF; // (t, theta) -> V*
    double L_F = 0.0;
    TimeFn c0F;
    double c1F = 0.0;

    std::function<Vec(double t, const Vec& theta)> opBbar; // E -> E*
    double m_Bbar = 0.0;
    TimeFn bbar0;
    double bbar1 = 0.0;

    std::function<Vec(double t, const Vec& theta, const Vec& y0)> rhsf; // -> E*
    double L_f = 0.0;
    double L_os = 0.0;
    TimeFn c0f;
    double c1f = 0.0, c2f = 0.0;

    Vec u0;
    Vec theta0;

    /// Fill norm_M / norm_Theta by power iteration in the Gram geometry
    /// (tolerance 1e-12) when they were not declared.
    void finalize();
};

/// Operator norm of a linear map (matrix) between two spaces by power
/// iteration on the generalized pencil, relative tolerance 1e-12.
double operator_norm(const Mat& map, const DiscreteSpace& domain, const Mat& codomain_gram);

/// Reduction to the abstract system:
///   A(t,th,v) = Abar(t,v),  J(t,th,z,v) = G(t,th,Mv) - <F(t,th),v>,
///   B(t,v,vbar,th) = Bbar(t,th) - f(t,th,Theta v),  g = 0, h1 = h2 = 0,
/// zero history operators, and the exact ledger mapping
///   m_A = m_Abar, mbar_A = 0, m_J = m_G |M|^2, mbar_J = mbar_G |M| + L_F,
///   m_B = m_Bbar - L_os, mbar_B = L_f |Theta|.
SystemProblem build_system(const DvhiProblem& dvhi, const TimeGrid& grid);

struct DvhiSolution {
    Trajectory u;
    Trajectory theta;
    SolveDiagnostics diagnostics;
};

DvhiSolution solve_dvhi(const DvhiProblem& dvhi, const TimeGrid& grid,
                        const SystemSolveConfig& cfg);

struct InequalitySlackReport {
    double min_slack = 0.0;             // over all nodes and test directions
    double max_theta_residual = 0.0;    // Euclidean residual of the theta equation
    int directions = 0;
    int nodes = 0;
};

/// A-posteriori check of the inequality form of the problem on a solved
/// trajectory pair, using a sampled-selection surrogate for G^0 (a certified
/// lower bound, so the reported slack is conservative).
InequalitySlackReport check_inequality_residual(const DvhiProblem& dvhi, const Trajectory& u,
                                                const Trajectory& theta, const TimeGrid& grid,
                                                int n_test_dirs, std::uint64_t seed = 7733);

} // namespace hdsys
