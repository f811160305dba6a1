#pragma once

#include "hdsys/dvhi.hpp"
#include "hdsys/system.hpp"

namespace hdsys::builtins {

/// A(t,th,v) = Av*v + Atheta*th, ledger derived from the matrices
/// (identity-Gram geometry): m = lambda_min(sym Av), mbar = a1 = |Atheta|_2,
/// a2 = |Av|_2.
OperatorFamilyA linear_A(const Mat& Av, const Mat& Atheta);

/// Selection s(t,th,z,v) = -kappa*v + Ctheta*th + Cz*z; m_J = kappa.
ClarkePotentialJ linear_relaxed_J(double kappa, const Mat& Ctheta, const Mat& Cz);

/// phi(t,th,y,v) = W(th,y) * |v|_1 with W = max(0, w0 + wth*|th| + wy*|y|);
/// prox is componentwise soft-thresholding. dim is the v-dimension (enters
/// the declared m_phi through the l1/l2 equivalence).
ConvexPotentialPhi weighted_l1_phi(double w0, double wth, double wy, int dim);

/// phi = (alpha/2)|v|^2: smooth convex reference potential.
ConvexPotentialPhi quadratic_phi(double alpha);

/// B(t,w,wbar,th) = Btheta*th + Cw*w + Cwbar*wbar.
OperatorFamilyB linear_B(const Mat& Btheta, const Mat& Cw, const Mat& Cwbar);

/// Selection s(t,w,th) = -kappa*th + Cw*w; m_g = kappa.
ClarkePotentialG linear_relaxed_g(double kappa, const Mat& Cw);

/// Volterra kernel base * exp(-decay (t-s)).
HistoryOperator volterra_exp(SpacePtr target, const Mat& base, double decay);

/// Accumulate-then-map with a linear post map.
HistoryOperator accumulate_linear(SpacePtr target, const Mat& post, Vec offset = Vec());

/// Trajectory whose component i is the polynomial sum_j coeffs[i][j] * t^j.
Trajectory polynomial_trajectory(SpacePtr space, const TimeGrid& grid,
                                 const std::vector<std::vector<double>>& coeffs);

/// Scalar decoupled decay: A(t,th,w) = w, B = th, everything else zero,
/// w0 = theta0 = 1. Exact discrete solution (1+dt)^{-k} for both unknowns.
SystemProblem linear_decay_problem(const TimeGrid& grid);

/// The bundled coupled benchmark: dim V = dim E = 2, nonzero J, phi, g, all
/// four history operators active; smallness margins equal to `margin` on both legs.
SystemProblem benchmark_problem(double margin, const TimeGrid& grid);

/// Manufactured smooth linear case: scalar decoupled with time-dependent
/// loads so that w(t) = 1 + cos t and theta(t) = 0.5 + sin t exactly.
SystemProblem manufactured_problem(const TimeGrid& grid);
double manufactured_w_exact(double t);
double manufactured_theta_exact(double t);

/// Seeded random solvable instance: dims <= max_dim, smallness margins >= the
/// requested floor, moderate couplings and history scales.
SystemProblem random_instance(std::uint64_t seed, const TimeGrid& grid, int max_dim = 8,
                              double min_margin = 0.25);

/// Linear instance with prescribed margins and couplings; used by the
/// estimate-verification suites where the analytic bounds must be honest.
SystemProblem linear_estimate_instance(const TimeGrid& grid);

/// Bundled DVHI instance: mildly nonsmooth Clarke potential composed with a
/// contraction map M, l1 friction-type phi, and a y-coupled right-hand side
/// f(t,theta,y). `smooth` strips G and phi (the degenerate equation case).
DvhiProblem dvhi_benchmark(bool smooth = false);

} // namespace hdsys::builtins
