#pragma once

#include <array>

#include "hdsys/probes.hpp"
#include "hdsys/system.hpp"

namespace hdsys::contact {

enum class BoundaryTag { dirichlet, neumann, contact };

/// Conforming triangulation of a rectangle. The cell diagonals flip
/// orientation across the vertical midline so the mesh is mirror-symmetric
/// about x = Lx/2 whenever nx is even.
struct Mesh2D {
    double Lx = 1.0, Ly = 1.0;
    int nx = 1, ny = 1;
    std::vector<Eigen::Vector2d> nodes;
    std::vector<std::array<int, 3>> triangles; // counter-clockwise
    struct BoundaryEdge {
        int a, b;
        BoundaryTag tag;
    };
    std::vector<BoundaryEdge> boundary_edges;

    /// Bottom edge: contact; left/right: Dirichlet (clamped); top: Neumann.
    static Mesh2D rectangle(double Lx, double Ly, int nx, int ny);

    int node_id(int i, int j) const { return j * (nx + 1) + i; }
    int mirror_node(int id) const;
};

/// P1 spaces with eliminated Dirichlet dofs, assembled Gram matrices
/// (stiffness+mass for the strong norms, mass for the weak ones), lumped
/// boundary mass and frame data on the contact boundary, and the nodal
/// averaging regularization.
struct FemSpaces {
    Mesh2D mesh;

    std::vector<int> vdof_of_node; // vector dof block index or -1
    std::vector<int> edof_of_node; // scalar dof index or -1

    SpacePtr V; // dim 2*nv: strong = grad-stiffness + mass, weak = mass
    SpacePtr E; // dim ne
    SpacePtr X; // E coefficients with the L2 (mass) norm

    Mat strain_stiffness; // (eps(phi_i), eps(phi_j)) on V dofs
    Mat div_stiffness;    // (div phi_i, div phi_j)

    std::vector<int> contact_nodes; // carries both V and E dofs, ordered by x
    std::vector<double> contact_weight;
    std::vector<Eigen::Vector2d> contact_normal;
    std::vector<Eigen::Vector2d> contact_tangent;
    Mat regularizer; // nodal averaging on contact values (1/2, 1/4, 1/4)

    double trace_norm_V = 0.0; // |gamma|: V -> lumped L2(Gamma_C; R^2)
    double trace_norm_E = 0.0;

    int n_vdofs() const { return V->dim(); }
    int n_edofs() const { return E->dim(); }

    /// Extend retained dofs to nodal values (Dirichlet nodes read zero).
    Eigen::Vector2d v_at_node(const Vec& vcoef, int node) const;
    double e_at_node(const Vec& ecoef, int node) const;

    static FemSpaces build(const Mesh2D& mesh);
};

/// Largest generalized singular value of the Gamma_C restriction map,
/// lumped boundary mass against the strong Gram, by power iteration to
/// 1e-10 relative.
double trace_norm(const DiscreteSpace& space, const Mat& boundary_mass);

/// Linear Kelvin-Voigt material with thermal expansion, exponential
/// relaxation kernel, linear Fourier conduction and a linear velocity heat
/// source. Stress conventions: plane strain, S^2 tensors as (xx, yy, xy).
struct MaterialLaw {
    double mu_v = 1.0, lambda_v = 0.5;  // viscosity
    double mu_e = 0.5, lambda_e = 0.25; // elasticity (enters R1)
    double relax_c = 0.0, relax_tau = 1.0;
    double c_e = 0.0;  // thermal expansion: Ce(theta) = -c_e * theta * I
    double kappa = 1.0;
    double source_n1 = 0.0, source_n2 = 0.0; // N(t,v) = n1 v_1 + n2 v_2

    double m_visc() const { return 2.0 * mu_v; }  // pointwise modulus of the law
    double m_cond() const { return kappa; }
    double relax_kernel(double lag) const {
        return relax_c == 0.0 ? 0.0 : relax_c * std::exp(-lag / relax_tau);
    }
};

/// Contact and friction laws on Gamma_C, parameterized built-ins with
/// numerically derived ledger constants.
struct ContactLaw {
    // normal damped response: sel(r) = s0 tanh(s1 r) - s2 r/(1+r^2)
    double jnu_s0 = 0.3, jnu_s1 = 2.0, jnu_s2 = 0.1;
    // damper k = k1 + (k2-k1) * sigma(k_theta * Rtheta + k_r * u_nu)
    double k1 = 0.5, k2 = 1.5, k_theta = 0.3, k_r = 0.2;
    // friction bound F_b = max(0, fb0 + fb1 * Rtheta + fb2 * slip)
    double fb0 = 0.1, fb1 = 0.05, fb2 = 0.02;
    // boundary heat potential: sel(th) = j_lin th - j_dip th/(1+th^2)
    double j_lin = 0.1, j_dip = 0.05;
    // tangential heat generation h_tau(r) = ht0 + ht1 r
    double ht0 = 0.0, ht1 = 0.1;

    double jnu_sel(double r) const {
        return jnu_s0 * std::tanh(jnu_s1 * r) - jnu_s2 * r / (1.0 + r * r);
    }
    double damper(double rtheta, double r) const {
        const double s = 0.5 * (1.0 + std::tanh(k_theta * rtheta + k_r * r));
        return k1 + (k2 - k1) * s;
    }
    double friction_bound(double rtheta, double slip) const {
        return std::max(0.0, fb0 + fb1 * rtheta + fb2 * slip);
    }
    double heat_sel(double th) const { return j_lin * th - j_dip * th / (1.0 + th * th); }
    double h_tau(double r) const { return ht0 + ht1 * r; }

    double cbar0() const { return std::abs(jnu_s0) + 0.5 * std::abs(jnu_s2); }
    double beta_bar() const;  // relaxed-monotonicity defect of jnu_sel (numeric)
    double m0() const;        // defect of heat_sel (numeric)
    double L_k() const { return 0.5 * (k2 - k1) * std::max(std::abs(k_theta), std::abs(k_r)); }
    double L_Fb() const { return std::max(std::abs(fb1), std::abs(fb2)); }
    double L_tau() const { return std::abs(ht1); }
};

/// Polynomial in (x, y, t): sum of c * x^px * y^py * t^pt terms.
struct PolyXT {
    struct Term {
        double c = 0.0;
        int px = 0, py = 0, pt = 0;
    };
    std::vector<Term> terms;

    PolyXT() = default;
    PolyXT(double constant) {
        if (constant != 0.0) terms.push_back({constant, 0, 0, 0});
    }
    double eval(double x, double y, double t) const {
        double acc = 0.0;
        for (const Term& m : terms)
            acc += m.c * std::pow(x, m.px) * std::pow(y, m.py) * std::pow(t, m.pt);
        return acc;
    }
    bool zero() const { return terms.empty(); }
};

struct ContactLoads {
    PolyXT f0x, f0y; // volume force density
    PolyXT fNx, fNy; // traction on Gamma_N
    PolyXT h0;       // volumetric heat source
};

struct ContactInitial {
    PolyXT u0x, u0y;
    PolyXT w0x, w0y;
    PolyXT theta0;
};

/// Everything assemble_problem produces: the abstract system plus the gate
/// ledger of the contact formulation.
struct ContactAssembly {
    FemSpaces fem;
    SystemProblem problem;
    MaterialLaw material;
    ContactLaw law;

    double m_material_A = 0.0; // pointwise modulus of the viscosity law
    double m_material_K = 0.0;
    double m_J = 0.0; // beta_bar * k2 * |gamma_V|^2
    double m_g = 0.0; // m0 * |gamma_E|^2

    Vec u0_coeffs; // initial displacement on V dofs
};

ContactAssembly assemble_problem(const Mesh2D& mesh, const MaterialLaw& material,
                                 const ContactLaw& law, const ContactLoads& loads,
                                 const ContactInitial& initial, const TimeGrid& grid);

struct ContactGateReport {
    bool pass = false;
    double margin_mech = 0.0; // m_A_material - beta_bar k2 |gamma|^2
    double margin_heat = 0.0; // m_K - m0 |gamma|^2
    SmallnessReport abstract_gate; // the assembled abstract ledger margins
};

ContactGateReport check_contact_smallness(const ContactAssembly& assembly);

struct ContactSolution {
    Trajectory w;     // velocity
    Trajectory u;     // displacement: u(t_k) = dt * sum_{j<k} w_j + u0
    Trajectory theta; // temperature
    // per node k, per element: (sxx, syy, sxy) at the centroid
    std::vector<std::vector<std::array<double, 3>>> sigma;
    SolveDiagnostics diagnostics;
    double max_penetration = 0.0; // max over Gamma_C and time of u_nu (reported only)
};

ContactSolution solve_contact(const ContactAssembly& assembly, const TimeGrid& grid,
                              const SystemSolveConfig& cfg);

/// Per-node field CSV at one instant: x,y,ux,uy,theta.
void write_fields_csv(const FemSpaces& fem, const Vec& u, const Vec& theta,
                      const std::string& path);

/// VTK legacy ASCII snapshot of (u, theta, sigma).
void write_vtk_snapshot(const FemSpaces& fem, const Vec& u, const Vec& theta,
                        const std::vector<std::array<double, 3>>& sigma,
                        const std::string& path);

} // namespace hdsys::contact
