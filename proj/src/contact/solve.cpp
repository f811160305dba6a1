#include <cstdio>

#include "hdsys/contact.hpp"

namespace hdsys::contact {

namespace {

std::array<double, 3> centroid_strain(const FemSpaces& fem, const std::array<int, 3>& tri,
                                      const Vec& vcoef) {
    const auto& nodes = fem.mesh.nodes;
    Mat J(2, 2);
    J << nodes[tri[1]].x() - nodes[tri[0]].x(), nodes[tri[2]].x() - nodes[tri[0]].x(),
        nodes[tri[1]].y() - nodes[tri[0]].y(), nodes[tri[2]].y() - nodes[tri[0]].y();
    const Mat Jti = J.inverse().transpose();
    Eigen::Vector2d grad[3];
    grad[1] = Jti * Eigen::Vector2d(1.0, 0.0);
    grad[2] = Jti * Eigen::Vector2d(0.0, 1.0);
    grad[0] = -grad[1] - grad[2];
    double ux_x = 0.0, ux_y = 0.0, uy_x = 0.0, uy_y = 0.0;
    for (int a = 0; a < 3; ++a) {
        const Eigen::Vector2d u = fem.v_at_node(vcoef, tri[a]);
        ux_x += u.x() * grad[a].x();
        ux_y += u.x() * grad[a].y();
        uy_x += u.y() * grad[a].x();
        uy_y += u.y() * grad[a].y();
    }
    return {ux_x, uy_y, 0.5 * (ux_y + uy_x)}; // (exx, eyy, exy)
}

std::array<double, 3> isotropic_stress(double two_mu, double lambda,
                                       const std::array<double, 3>& eps) {
    const double tr = eps[0] + eps[1];
    return {two_mu * eps[0] + lambda * tr, two_mu * eps[1] + lambda * tr, two_mu * eps[2]};
}

} // namespace

ContactSolution solve_contact(const ContactAssembly& assembly, const TimeGrid& grid,
                              const SystemSolveConfig& cfg) {
    const ContactGateReport gate = check_contact_smallness(assembly);
    if (!gate.pass)
        throw Error(ErrorCode::gate_failure,
                    "solve_contact: contact smallness gate fails: margins (" +
                        std::to_string(gate.margin_mech) + ", " +
                        std::to_string(gate.margin_heat) + ")");

    SystemSolution sys = solve_system(assembly.problem, grid, cfg);

    ContactSolution sol{std::move(sys.w), Trajectory(assembly.problem.V, grid),
                        std::move(sys.theta), {}, sys.diagnostics, 0.0};

    // displacement recovery u(t_k) = dt * sum_{j<k} w_j + u0 (left rectangle)
    const double dt = grid.dt();
    Vec acc = assembly.u0_coeffs;
    sol.u.values[0] = acc;
    for (int k = 1; k <= grid.steps(); ++k) {
        acc += dt * sol.w.values[k - 1];
        sol.u.values[k] = acc;
    }

    // stress recovery at element centroids from the constitutive law
    const FemSpaces& fem = assembly.fem;
    const MaterialLaw& mat = assembly.material;
    const size_t nelem = fem.mesh.triangles.size();
    sol.sigma.assign(grid.steps() + 1, std::vector<std::array<double, 3>>(nelem));
    for (int k = 0; k <= grid.steps(); ++k) {
        const double tk = grid.node(k);
        for (size_t e = 0; e < nelem; ++e) {
            const auto& tri = fem.mesh.triangles[e];
            const auto eps_w = centroid_strain(fem, tri, sol.w.values[k]);
            const auto eps_u = centroid_strain(fem, tri, sol.u.values[k]);
            auto sig = isotropic_stress(2.0 * mat.mu_v, mat.lambda_v, eps_w);
            const auto sig_e = isotropic_stress(2.0 * mat.mu_e, mat.lambda_e, eps_u);
            for (int c = 0; c < 3; ++c) sig[c] += sig_e[c];
            if (mat.relax_c != 0.0) {
                std::array<double, 3> conv{0.0, 0.0, 0.0};
                for (int j = 0; j < k; ++j) {
                    const double ker = mat.relax_kernel(tk - grid.node(j));
                    const auto eps_j = centroid_strain(fem, tri, sol.w.values[j]);
                    for (int c = 0; c < 3; ++c) conv[c] += dt * ker * eps_j[c];
                }
                for (int c = 0; c < 3; ++c) sig[c] += conv[c];
            }
            double theta_bar = 0.0;
            for (int a = 0; a < 3; ++a) theta_bar += fem.e_at_node(sol.theta.values[k], tri[a]);
            theta_bar /= 3.0;
            const double th = -mat.c_e * theta_bar;
            sig[0] += th;
            sig[1] += th;
            sol.sigma[k][e] = sig;
        }
    }

    // interpenetration diagnostic: normal displacement on Gamma_C
    for (int k = 0; k <= grid.steps(); ++k) {
        for (size_t q = 0; q < fem.contact_nodes.size(); ++q) {
            const Eigen::Vector2d u = fem.v_at_node(sol.u.values[k], fem.contact_nodes[q]);
            sol.max_penetration =
                std::max(sol.max_penetration, u.dot(fem.contact_normal[q]));
        }
    }
    return sol;
}

void write_fields_csv(const FemSpaces& fem, const Vec& u, const Vec& theta,
                      const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, ErrorCode::config, "cannot open for writing: " + path);
    std::fprintf(f, "x,y,ux,uy,theta\n");
    for (size_t n = 0; n < fem.mesh.nodes.size(); ++n) {
        const Eigen::Vector2d x = fem.mesh.nodes[n];
        const Eigen::Vector2d un = fem.v_at_node(u, static_cast<int>(n));
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x.x(), x.y(), un.x(), un.y(),
                     fem.e_at_node(theta, static_cast<int>(n)));
    }
    std::fclose(f);
}

void write_vtk_snapshot(const FemSpaces& fem, const Vec& u, const Vec& theta,
                        const std::vector<std::array<double, 3>>& sigma,
                        const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, ErrorCode::config, "cannot open for writing: " + path);
    const auto& mesh = fem.mesh;
    std::fprintf(f, "# vtk DataFile Version 3.0\nthermoviscoelastic contact snapshot\n");
    std::fprintf(f, "ASCII\nDATASET UNSTRUCTURED_GRID\n");
    std::fprintf(f, "POINTS %zu double\n", mesh.nodes.size());
    for (const auto& p : mesh.nodes) std::fprintf(f, "%.12g %.12g 0\n", p.x(), p.y());
    std::fprintf(f, "CELLS %zu %zu\n", mesh.triangles.size(), 4 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) std::fprintf(f, "3 %d %d %d\n", t[0], t[1], t[2]);
    std::fprintf(f, "CELL_TYPES %zu\n", mesh.triangles.size());
    for (size_t i = 0; i < mesh.triangles.size(); ++i) std::fprintf(f, "5\n");
    std::fprintf(f, "POINT_DATA %zu\n", mesh.nodes.size());
    std::fprintf(f, "VECTORS displacement double\n");
    for (size_t n = 0; n < mesh.nodes.size(); ++n) {
        const Eigen::Vector2d un = fem.v_at_node(u, static_cast<int>(n));
        std::fprintf(f, "%.12g %.12g 0\n", un.x(), un.y());
    }
    std::fprintf(f, "SCALARS temperature double 1\nLOOKUP_TABLE default\n");
    for (size_t n = 0; n < mesh.nodes.size(); ++n)
        std::fprintf(f, "%.12g\n", fem.e_at_node(theta, static_cast<int>(n)));
    if (sigma.size() == mesh.triangles.size()) {
        std::fprintf(f, "CELL_DATA %zu\n", mesh.triangles.size());
        std::fprintf(f, "TENSORS stress double\n");
        for (const auto& s : sigma)
            std::fprintf(f, "%.12g %.12g 0\n%.12g %.12g 0\n0 0 0\n", s[0], s[2], s[2], s[1]);
    }
    std::fclose(f);
}

} // namespace hdsys::contact
