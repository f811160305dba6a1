#include "hdsys/contact.hpp"
#include "hdsys/dvhi.hpp" // operator_norm

namespace hdsys::contact {

namespace {

double min_slope(const std::function<double(double)>& f, double lo, double hi, int samples) {
    double worst = std::numeric_limits<double>::infinity();
    const double h = (hi - lo) / samples;
    for (int i = 0; i < samples; ++i) {
        const double a = lo + i * h, b = a + h;
        worst = std::min(worst, (f(b) - f(a)) / h);
    }
    return worst;
}

double generalized_lambda(const Mat& K, const Mat& G, bool largest) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()), G);
    require(es.info() == Eigen::Success, ErrorCode::config,
            "assemble: generalized eigensolve failed");
    return largest ? es.eigenvalues().maxCoeff() : es.eigenvalues().minCoeff();
}

} // namespace

double ContactLaw::beta_bar() const {
    const double worst = min_slope([this](double r) { return jnu_sel(r); }, -30.0, 30.0, 60000);
    return std::max(0.0, -worst);
}

double ContactLaw::m0() const {
    const double worst = min_slope([this](double r) { return heat_sel(r); }, -30.0, 30.0, 60000);
    return std::max(0.0, -worst);
}

ContactAssembly assemble_problem(const Mesh2D& mesh, const MaterialLaw& material,
                                 const ContactLaw& law, const ContactLoads& loads,
                                 const ContactInitial& initial, const TimeGrid& grid) {
    ContactAssembly as;
    as.fem = FemSpaces::build(mesh);
    as.material = material;
    as.law = law;
    const FemSpaces& fem = as.fem;
    require(!fem.contact_nodes.empty(), ErrorCode::config,
            "assemble: the contact boundary carries no free nodes");

    const int nvd = fem.n_vdofs();
    const int ne = fem.n_edofs();
    const int nc = static_cast<int>(fem.contact_nodes.size());
    const int nn = static_cast<int>(mesh.nodes.size());

    // --- mechanical operator matrices -------------------------------------
    const Mat K_visc = 2.0 * material.mu_v * fem.strain_stiffness +
                       material.lambda_v * fem.div_stiffness;
    const Mat K_elast = 2.0 * material.mu_e * fem.strain_stiffness +
                        material.lambda_e * fem.div_stiffness;

    // thermal expansion coupling (E coefficients -> V dual), 1-point quadrature
    Mat C_th = Mat::Zero(nvd, ne);
    // heat source coupling (V coefficients -> E dual)
    Mat N_mat = Mat::Zero(ne, nvd);
    // scalar conduction stiffness on E dofs
    Mat K_cond = Mat::Zero(ne, ne);

    for (const auto& tri : mesh.triangles) {
        const Eigen::Vector2d& p0 = mesh.nodes[tri[0]];
        const Eigen::Vector2d& p1 = mesh.nodes[tri[1]];
        const Eigen::Vector2d& p2 = mesh.nodes[tri[2]];
        Mat J(2, 2);
        J << p1.x() - p0.x(), p2.x() - p0.x(), p1.y() - p0.y(), p2.y() - p0.y();
        const double area = 0.5 * J.determinant();
        const Mat Jti = J.inverse().transpose();
        Eigen::Vector2d grad[3];
        grad[1] = Jti * Eigen::Vector2d(1.0, 0.0);
        grad[2] = Jti * Eigen::Vector2d(0.0, 1.0);
        grad[0] = -grad[1] - grad[2];

        for (int a = 0; a < 3; ++a) {
            const int ea = fem.edof_of_node[tri[a]];
            for (int b = 0; b < 3; ++b) {
                const int eb = fem.edof_of_node[tri[b]];
                if (ea >= 0 && eb >= 0)
                    K_cond(ea, eb) += material.kappa * area * grad[a].dot(grad[b]);

                const int db = fem.vdof_of_node[tri[b]];
                if (db >= 0 && ea >= 0) {
                    for (int j = 0; j < 2; ++j) {
                        // (Ce(theta), eps(v)) = -c_e * theta_bar * div(v) * area
                        C_th(2 * db + j, ea) += -material.c_e * area * grad[b][j] / 3.0;
                        // (N(w), zeta) with N = n1 w1 + n2 w2, midpoint values
                        const double nj = (j == 0) ? material.source_n1 : material.source_n2;
                        N_mat(ea, 2 * db + j) += nj * area / 9.0;
                    }
                }
            }
        }
    }

    // --- spaces ------------------------------------------------------------
    SystemProblem p;
    p.V = fem.V;
    p.H = std::make_shared<DiscreteSpace>(nvd, fem.V->gram_weak(), fem.V->gram_weak(), "H");
    p.E = fem.E;
    p.X = fem.X;
    Mat Bmass = Mat::Zero(nc, nc);
    for (int q = 0; q < nc; ++q) Bmass(q, q) = fem.contact_weight[q];
    p.Y = std::make_shared<DiscreteSpace>(nc, Bmass, Bmass, "Y");
    p.Z = std::make_shared<DiscreteSpace>(nc, Bmass, Bmass, "Z");
    p.Q = DiscreteSpace::euclidean(1, "Q");
    SpacePtr dualV = p.V->dual("V*");

    // contact nodal helpers
    struct Frame {
        int node, vdof, edof;
        double w;
        Eigen::Vector2d nu, tau;
    };
    std::vector<Frame> frames(nc);
    for (int q = 0; q < nc; ++q)
        frames[q] = {fem.contact_nodes[q], fem.vdof_of_node[fem.contact_nodes[q]],
                     fem.edof_of_node[fem.contact_nodes[q]], fem.contact_weight[q],
                     fem.contact_normal[q], fem.contact_tangent[q]};
    const Mat R_avg = fem.regularizer;

    auto contact_values_of_theta = [frames, R_avg](const Vec& theta) {
        Vec raw(static_cast<int>(frames.size()));
        for (size_t q = 0; q < frames.size(); ++q)
            raw[static_cast<int>(q)] = frames[q].edof >= 0 ? theta[frames[q].edof] : 0.0;
        return Vec(R_avg * raw);
    };

    // --- operator A: viscosity + thermal expansion -------------------------
    p.opA.eval = [K_visc, C_th](double, const Vec& theta, const Vec& v) {
        Vec out = K_visc * v;
        out += C_th * theta;
        return out;
    };
    p.opA.m = generalized_lambda(K_visc, fem.V->gram_strong(), false);
    p.opA.mbar = operator_norm(C_th, *fem.X, dualV->gram_strong());
    p.opA.a0 = TimeFn(0.0);
    p.opA.a1 = p.opA.mbar;
    p.opA.a2 = generalized_lambda(K_visc, fem.V->gram_strong(), true);

    // --- J: damped normal response on Gamma_C ------------------------------
    const double trV = fem.trace_norm_V;
    const double trE = fem.trace_norm_E;
    const double theta_to_gamma =
        operator_norm(Mat(R_avg * [&] {
                          Mat T = Mat::Zero(nc, ne);
                          for (int q = 0; q < nc; ++q)
                              if (frames[q].edof >= 0) T(q, frames[q].edof) = 1.0;
                          return T;
                      }()),
                      *fem.X, Bmass);

    ContactLaw lw = law;
    p.potJ.subgrad = [frames, lw, contact_values_of_theta, nvd](double, const Vec& theta,
                                                                const Vec& z, const Vec& v) {
        const Vec rtheta = contact_values_of_theta(theta);
        Vec out = Vec::Zero(nvd);
        for (size_t q = 0; q < frames.size(); ++q) {
            const Frame& f = frames[q];
            const double vn = v[2 * f.vdof] * f.nu.x() + v[2 * f.vdof + 1] * f.nu.y();
            const double val = f.w * lw.damper(rtheta[static_cast<int>(q)], z[static_cast<int>(q)]) *
                               lw.jnu_sel(vn);
            out[2 * f.vdof] += val * f.nu.x();
            out[2 * f.vdof + 1] += val * f.nu.y();
        }
        return out;
    };
    const double beta_bar = law.beta_bar();
    const double cbar0 = law.cbar0();
    as.m_J = beta_bar * law.k2 * trV * trV;
    p.potJ.m = as.m_J;
    p.potJ.mbar = law.L_k() * cbar0 * trV * std::max(theta_to_gamma, 1.0);
    double total_weight = 0.0;
    for (const Frame& f : frames) total_weight += f.w;
    p.potJ.c0 = TimeFn(law.k2 * cbar0 * std::sqrt(total_weight) * trV);

    // --- phi: friction functional with temperature/slip-dependent bound ----
    p.potPhi.prox = [frames, lw, contact_values_of_theta](double, const Vec& theta, const Vec& y,
                                                          double rho, const Vec& x) {
        const Vec rtheta = contact_values_of_theta(theta);
        Vec out = x;
        for (size_t q = 0; q < frames.size(); ++q) {
            const Frame& f = frames[q];
            const double Fb =
                lw.friction_bound(rtheta[static_cast<int>(q)], y[static_cast<int>(q)]);
            const double thr = rho * f.w * Fb;
            Eigen::Vector2d xp(x[2 * f.vdof], x[2 * f.vdof + 1]);
            const double xn = xp.dot(f.nu);
            double xt = xp.dot(f.tau);
            xt = std::copysign(std::max(0.0, std::abs(xt) - thr), xt);
            const Eigen::Vector2d np = xn * f.nu + xt * f.tau;
            out[2 * f.vdof] = np.x();
            out[2 * f.vdof + 1] = np.y();
        }
        return out;
    };
    p.potPhi.value = [frames, lw, contact_values_of_theta](double, const Vec& theta, const Vec& y,
                                                           const Vec& v) {
        const Vec rtheta = contact_values_of_theta(theta);
        double acc = 0.0;
        for (size_t q = 0; q < frames.size(); ++q) {
            const Frame& f = frames[q];
            const double vt = v[2 * f.vdof] * f.tau.x() + v[2 * f.vdof + 1] * f.tau.y();
            acc += f.w *
                   lw.friction_bound(rtheta[static_cast<int>(q)], y[static_cast<int>(q)]) *
                   std::abs(vt);
        }
        return acc;
    };
    p.potPhi.m = law.L_Fb() * trV * std::max(theta_to_gamma, 1.0);
    p.potPhi.c0 = TimeFn(std::abs(law.fb0) * std::sqrt(total_weight) * trV);
    p.potPhi.c1 = law.L_Fb() * theta_to_gamma * trV;
    p.potPhi.c2 = law.L_Fb() * trV;
    p.potPhi.c3 = 0.0;

    // --- B: conduction - velocity source - tangential heating --------------
    p.opB.eval = [K_cond, N_mat, frames, lw](double, const Vec& w, const Vec&,
                                             const Vec& theta) {
        Vec out = K_cond * theta;
        out -= N_mat * w;
        for (const Frame& f : frames) {
            if (f.edof < 0) continue;
            const double wt = w[2 * f.vdof] * f.tau.x() + w[2 * f.vdof + 1] * f.tau.y();
            out[f.edof] -= f.w * lw.h_tau(std::abs(wt));
        }
        return out;
    };
    p.opB.m = generalized_lambda(K_cond, fem.E->gram_strong(), false);
    p.opB.mbar = operator_norm(N_mat, *fem.V, fem.E->dual("E*")->gram_strong()) +
                 law.L_tau() * trV * trE;
    p.opB.b0 = TimeFn(law.ht0 * std::sqrt(total_weight) * trE);
    p.opB.b1 = p.opB.mbar;
    p.opB.b3 = generalized_lambda(K_cond, fem.E->gram_strong(), true);

    // --- g: boundary heat exchange potential --------------------------------
    const double m0 = law.m0();
    p.potG.subgrad = [frames, lw, ne](double, const Vec&, const Vec& theta) {
        Vec out = Vec::Zero(ne);
        for (const Frame& f : frames) {
            if (f.edof < 0) continue;
            out[f.edof] += f.w * lw.heat_sel(theta[f.edof]);
        }
        return out;
    };
    as.m_g = m0 * trE * trE;
    p.potG.m = as.m_g;
    p.potG.mbar = 0.0;
    p.potG.c2 = (std::abs(law.j_lin) + std::abs(law.j_dip)) * trE * trE;

    // --- history operators ---------------------------------------------------
    // S: accumulated normal displacement
    Mat N_extract = Mat::Zero(nc, nvd);
    Vec u0nu(nc), u0tau(nc);
    Mat T_extract = Mat::Zero(nc, nvd);
    for (int q = 0; q < nc; ++q) {
        const Frame& f = frames[q];
        N_extract(q, 2 * f.vdof) = f.nu.x();
        N_extract(q, 2 * f.vdof + 1) = f.nu.y();
        T_extract(q, 2 * f.vdof) = f.tau.x();
        T_extract(q, 2 * f.vdof + 1) = f.tau.y();
        const Eigen::Vector2d xq = mesh.nodes[f.node];
        const Eigen::Vector2d u0(initial.u0x.eval(xq.x(), xq.y(), 0.0),
                                 initial.u0y.eval(xq.x(), xq.y(), 0.0));
        u0nu[q] = u0.dot(f.nu);
        u0tau[q] = u0.dot(f.tau);
    }
    p.histS = HistoryOperator::accumulate_then_map(
        p.Z, [N_extract](const Vec& acc) { return Vec(N_extract * acc); }, trV, u0nu);

    // R: total slip - nested accumulation of |u_tau|
    p.histR = HistoryOperator::custom(
        p.Y,
        [T_extract, u0tau, nc](std::span<const Vec> prefix, const TimeGrid& g, int) {
            const double dt = g.dt();
            Vec disp = u0tau;
            Vec out = Vec::Zero(nc);
            for (const Vec& v : prefix) {
                out += dt * disp.cwiseAbs();
                disp += dt * (T_extract * v);
            }
            return out;
        },
        grid.horizon() * trV);

    // R1: elasticity of the recovered displacement + relaxation convolution.
    // TODO: cache the prefix strain sums per trajectory pass; the rebuild is
    // O(k) dense matvecs per node, which dominates long-horizon runs.
    Vec u0_coeffs = Vec::Zero(nvd);
    for (int n = 0; n < nn; ++n) {
        const int dv = fem.vdof_of_node[n];
        if (dv < 0) continue;
        const Eigen::Vector2d xq = mesh.nodes[n];
        u0_coeffs[2 * dv] = initial.u0x.eval(xq.x(), xq.y(), 0.0);
        u0_coeffs[2 * dv + 1] = initial.u0y.eval(xq.x(), xq.y(), 0.0);
    }
    as.u0_coeffs = u0_coeffs;
    const Mat K_strain = fem.strain_stiffness;
    const MaterialLaw mat = material;
    p.histR1 = HistoryOperator::custom(
        dualV,
        [K_elast, K_strain, mat, u0_coeffs](std::span<const Vec> prefix, const TimeGrid& g,
                                            int k) {
            const double dt = g.dt();
            const double tk = g.node(k);
            Vec acc = u0_coeffs;
            Vec out = Vec::Zero(u0_coeffs.size());
            for (int j = 0; j < static_cast<int>(prefix.size()); ++j) {
                if (mat.relax_c != 0.0)
                    out += dt * mat.relax_kernel(tk - g.node(j)) * (K_strain * prefix[j]);
                acc += dt * prefix[j];
            }
            out += K_elast * acc;
            return out;
        },
        generalized_lambda(K_elast, fem.V->gram_strong(), true) +
            std::abs(material.relax_c) *
                generalized_lambda(K_strain, fem.V->gram_strong(), true));

    p.histR2 = HistoryOperator::zero(p.Q); // B carries no history argument here

    // --- loads and initial data ---------------------------------------------
    p.load1 = Trajectory::sample(dualV, grid, [&](double t) {
        Vec f = Vec::Zero(nvd);
        // volume force, 1-point quadrature
        if (!loads.f0x.zero() || !loads.f0y.zero()) {
            for (const auto& tri : mesh.triangles) {
                const Eigen::Vector2d c =
                    (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
                Mat J(2, 2);
                J << mesh.nodes[tri[1]].x() - mesh.nodes[tri[0]].x(),
                    mesh.nodes[tri[2]].x() - mesh.nodes[tri[0]].x(),
                    mesh.nodes[tri[1]].y() - mesh.nodes[tri[0]].y(),
                    mesh.nodes[tri[2]].y() - mesh.nodes[tri[0]].y();
                const double area = 0.5 * J.determinant();
                const Eigen::Vector2d f0(loads.f0x.eval(c.x(), c.y(), t),
                                         loads.f0y.eval(c.x(), c.y(), t));
                for (int a = 0; a < 3; ++a) {
                    const int dv = fem.vdof_of_node[tri[a]];
                    if (dv < 0) continue;
                    f[2 * dv] += area * f0.x() / 3.0;
                    f[2 * dv + 1] += area * f0.y() / 3.0;
                }
            }
        }
        // traction on Gamma_N, lumped
        for (const auto& e : mesh.boundary_edges) {
            if (e.tag != BoundaryTag::neumann) continue;
            const double len = (mesh.nodes[e.a] - mesh.nodes[e.b]).norm();
            for (int n : {e.a, e.b}) {
                const int dv = fem.vdof_of_node[n];
                if (dv < 0) continue;
                const Eigen::Vector2d x = mesh.nodes[n];
                f[2 * dv] += 0.5 * len * loads.fNx.eval(x.x(), x.y(), t);
                f[2 * dv + 1] += 0.5 * len * loads.fNy.eval(x.x(), x.y(), t);
            }
        }
        return f;
    });

    p.load2 = Trajectory::sample(fem.E->dual("E*"), grid, [&](double t) {
        Vec h = Vec::Zero(ne);
        if (!loads.h0.zero()) {
            for (const auto& tri : mesh.triangles) {
                const Eigen::Vector2d c =
                    (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
                Mat J(2, 2);
                J << mesh.nodes[tri[1]].x() - mesh.nodes[tri[0]].x(),
                    mesh.nodes[tri[2]].x() - mesh.nodes[tri[0]].x(),
                    mesh.nodes[tri[1]].y() - mesh.nodes[tri[0]].y(),
                    mesh.nodes[tri[2]].y() - mesh.nodes[tri[0]].y();
                const double area = 0.5 * J.determinant();
                const double h0 = loads.h0.eval(c.x(), c.y(), t);
                for (int a = 0; a < 3; ++a) {
                    const int de = fem.edof_of_node[tri[a]];
                    if (de >= 0) h[de] += area * h0 / 3.0;
                }
            }
        }
        return h;
    });

    p.w0 = Vec::Zero(nvd);
    p.theta0 = Vec::Zero(ne);
    for (int n = 0; n < nn; ++n) {
        const Eigen::Vector2d x = mesh.nodes[n];
        const int dv = fem.vdof_of_node[n];
        if (dv >= 0) {
            p.w0[2 * dv] = initial.w0x.eval(x.x(), x.y(), 0.0);
            p.w0[2 * dv + 1] = initial.w0y.eval(x.x(), x.y(), 0.0);
        }
        const int de = fem.edof_of_node[n];
        if (de >= 0) p.theta0[de] = initial.theta0.eval(x.x(), x.y(), 0.0);
    }

    as.m_material_A = material.m_visc();
    as.m_material_K = material.m_cond();
    as.problem = std::move(p);
    return as;
}

ContactGateReport check_contact_smallness(const ContactAssembly& assembly) {
    ContactGateReport rep;
    rep.margin_mech = assembly.m_material_A - assembly.m_J;
    rep.margin_heat = assembly.m_material_K - assembly.m_g;
    rep.pass = rep.margin_mech > 0.0 && rep.margin_heat > 0.0;
    rep.abstract_gate = assembly.problem.smallness();
    return rep;
}

} // namespace hdsys::contact
