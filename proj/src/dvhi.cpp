#include "hdsys/dvhi.hpp"

#include <cmath>

namespace hdsys {

double operator_norm(const Mat& map, const DiscreteSpace& domain, const Mat& codomain_gram) {
    require_arg(map.cols() == domain.dim(), "operator_norm: domain dimension mismatch");
    require_arg(codomain_gram.rows() == map.rows() && codomain_gram.cols() == map.rows(),
                "operator_norm: codomain Gram shape mismatch");
    if (map.rows() == 0 || map.isZero(0.0)) return 0.0;

    const Mat MtGM = map.transpose() * codomain_gram * map;
    Vec x = Vec::Ones(domain.dim());
    x /= std::max(domain.norm_strong(x), 1e-300);
    double lambda = 0.0;
    const int max_iters = 10000;
    for (int i = 0; i < max_iters; ++i) {
        Vec y = domain.solve_strong(MtGM * x);
        const double ny = y.norm();
        if (ny <= 1e-300) return 0.0;
        y /= ny;
        const double num = y.dot(MtGM * y);
        const double den = y.dot(domain.gram_strong() * y);
        const double lambda_new = num / den;
        const bool done = std::abs(lambda_new - lambda) <= 1e-12 * std::max(1.0, lambda_new);
        lambda = lambda_new;
        x = y;
        if (done && i > 2) return std::sqrt(std::max(0.0, lambda));
    }
    throw NonConvergence("operator_norm (power iteration)", -1, lambda, max_iters);
}

void DvhiProblem::finalize() {
    if (norm_M < 0.0) norm_M = operator_norm(mapM, *V, X0->gram_strong());
    if (norm_Theta < 0.0) {
        // Geometry of the H-leg of the V triple.
        DiscreteSpace Hspace(V->dim(), V->gram_weak(), V->gram_weak(), "H");
        norm_Theta = operator_norm(mapTheta, Hspace, Y0->gram_strong());
    }
}

SystemProblem build_system(const DvhiProblem& dvhi, const TimeGrid& grid) {
    require(dvhi.norm_M >= 0.0 && dvhi.norm_Theta >= 0.0, ErrorCode::config,
            "build_system: call finalize() first (operator norms unset)");
    const double m_J = dvhi.m_G * dvhi.norm_M * dvhi.norm_M;
    const double m_B = dvhi.m_Bbar - dvhi.L_os;
    require(dvhi.m_Abar > m_J && m_B > 0.0, ErrorCode::gate_failure,
            "build_system: reduction smallness fails: need m_Abar > m_G |M|^2 and m_Bbar > L_os (margins " +
                std::to_string(dvhi.m_Abar - m_J) + ", " + std::to_string(m_B) + ")");

    SystemProblem p;
    p.V = dvhi.V;
    p.H = std::make_shared<DiscreteSpace>(dvhi.V->dim(), dvhi.V->gram_weak(),
                                          dvhi.V->gram_weak(), "H");
    p.E = dvhi.E;
    p.X = dvhi.X;
    p.Y = DiscreteSpace::euclidean(1, "Y");
    p.Z = DiscreteSpace::euclidean(1, "Z");
    p.Q = DiscreteSpace::euclidean(1, "Q");

    p.opA.eval = [op = dvhi.opAbar](double t, const Vec&, const Vec& v) { return op(t, v); };
    p.opA.m = dvhi.m_Abar;
    p.opA.mbar = 0.0;
    p.opA.a0 = dvhi.abar0;
    p.opA.a1 = 0.0;
    p.opA.a2 = dvhi.abar1;

    const Mat M = dvhi.mapM;
    p.potJ.subgrad = [M, sel = dvhi.subgradG, F = dvhi.rhsF](double t, const Vec& theta,
                                                             const Vec&, const Vec& v) {
        Vec out = M.transpose() * sel(t, theta, M * v);
        out -= F(t, theta);
        return out;
    };
    p.potJ.m = m_J;
    p.potJ.mbar = dvhi.mbar_G * dvhi.norm_M + dvhi.L_F;
    p.potJ.c0 = TimeFn([c0G = dvhi.c0G, c0F = dvhi.c0F, nm = dvhi.norm_M](double t) {
        return nm * c0G(t) + c0F(t);
    });
    p.potJ.c1 = dvhi.norm_M * dvhi.c1G + dvhi.c1F;
    p.potJ.c2 = 0.0;
    p.potJ.c3 = dvhi.norm_M * dvhi.norm_M * dvhi.c2G;

    p.potPhi = dvhi.potPhi;

    p.opB.eval = [Bb = dvhi.opBbar, f = dvhi.rhsf, Th = dvhi.mapTheta](
                     double t, const Vec& w, const Vec&, const Vec& theta) {
        Vec out = Bb(t, theta);
        out -= f(t, theta, Th * w);
        return out;
    };
    p.opB.m = m_B;
    p.opB.mbar = dvhi.L_f * dvhi.norm_Theta;
    p.opB.b0 = TimeFn([b0 = dvhi.bbar0, c0 = dvhi.c0f](double t) { return b0(t) + c0(t); });
    p.opB.b1 = dvhi.c2f * dvhi.norm_Theta;
    p.opB.b2 = 0.0;
    p.opB.b3 = dvhi.bbar1 + dvhi.c1f;

    p.potG.subgrad = nullptr; // g = 0
    p.potG.m = 0.0;

    p.histR = HistoryOperator::zero(p.Y);
    p.histR1 = HistoryOperator::zero(p.V->dual("V*"));
    p.histR2 = HistoryOperator::zero(p.Q);
    p.histS = HistoryOperator::zero(p.Z);

    p.load1 = Trajectory::zero(p.V->dual("V*"), grid);
    p.load2 = Trajectory::zero(p.E->dual("E*"), grid);
    p.w0 = dvhi.u0;
    p.theta0 = dvhi.theta0;
    return p;
}

DvhiSolution solve_dvhi(const DvhiProblem& dvhi, const TimeGrid& grid,
                        const SystemSolveConfig& cfg) {
    const SystemProblem sys = build_system(dvhi, grid);
    SystemSolution sol = solve_system(sys, grid, cfg);
    return DvhiSolution{std::move(sol.w), std::move(sol.theta), sol.diagnostics};
}

InequalitySlackReport check_inequality_residual(const DvhiProblem& dvhi, const Trajectory& u,
                                                const Trajectory& theta, const TimeGrid& grid,
                                                int n_test_dirs, std::uint64_t seed) {
    require_arg(n_test_dirs >= 1, "check_inequality_residual: need at least one direction");
    require(static_cast<bool>(dvhi.potPhi.value) || !dvhi.potPhi.present(), ErrorCode::config,
            "check_inequality_residual: phi values required when phi is present");

    NormalStream rng(seed);
    std::vector<Vec> dirs;
    dirs.reserve(n_test_dirs);
    for (int i = 0; i < n_test_dirs; ++i) dirs.push_back(rng.on_sphere(*dvhi.V, 1.0, 1.0));

    // Upper-semicontinuity sampling of G^0: the stored selection at the base
    // point plus selections at perturbed points shrinking toward it. A
    // user-declared exact bound takes precedence.
    auto G0_surrogate = [&](double t, const Vec& th, const Vec& base, const Vec& d,
                            NormalStream& pert_rng) {
        if (dvhi.dirderiv_upperG) return dvhi.dirderiv_upperG(t, th, base, d);
        double best = dual_pair(dvhi.subgradG(t, th, base), d);
        double radius = 1e-3;
        for (int i = 0; i < 8; ++i) {
            const Vec p = base + radius * pert_rng.vector(static_cast<int>(base.size()));
            best = std::max(best, dual_pair(dvhi.subgradG(t, th, p), d));
            radius *= 0.5;
        }
        return best;
    };

    InequalitySlackReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    rep.directions = n_test_dirs;
    rep.nodes = grid.steps();
    const double dt = grid.dt();

    for (int k = 1; k <= grid.steps(); ++k) {
        const double t = grid.node(k);
        const Vec& uk = u.values[k];
        const Vec& th = theta.values[k];
        const Vec udot_dual = dvhi.V->mass_apply((uk - u.values[k - 1]) / dt);
        const Vec Abar_u = dvhi.opAbar(t, uk);
        const Vec F_th = dvhi.rhsF(t, th);
        const Vec Mu = dvhi.mapM * uk;
        const double phi_u = dvhi.potPhi.present() ? dvhi.potPhi.value(t, th, Vec(), uk) : 0.0;

        for (const Vec& v : dirs) {
            const Vec dv = v - uk;
            double slack = dual_pair(udot_dual + Abar_u - F_th, dv);
            slack += G0_surrogate(t, th, Mu, dvhi.mapM * dv, rng);
            if (dvhi.potPhi.present()) slack += dvhi.potPhi.value(t, th, Vec(), v) - phi_u;
            rep.min_slack = std::min(rep.min_slack, slack);
        }

        const Vec theta_res = dvhi.E->mass_apply((th - theta.values[k - 1]) / dt) +
                              dvhi.opBbar(t, th) - dvhi.rhsf(t, th, dvhi.mapTheta * uk);
        rep.max_theta_residual = std::max(rep.max_theta_residual, theta_res.norm());
    }
    return rep;
}

} // namespace hdsys
