#include <algorithm>

#include "hdsys/contact.hpp"

namespace hdsys::contact {

namespace {

struct ElementGeometry {
    double area;
    Eigen::Vector2d grad[3]; // gradients of the barycentric basis
};

ElementGeometry element_geometry(const Mesh2D& mesh, const std::array<int, 3>& tri) {
    const Eigen::Vector2d& p0 = mesh.nodes[tri[0]];
    const Eigen::Vector2d& p1 = mesh.nodes[tri[1]];
    const Eigen::Vector2d& p2 = mesh.nodes[tri[2]];
    Mat J(2, 2);
    J << p1.x() - p0.x(), p2.x() - p0.x(), p1.y() - p0.y(), p2.y() - p0.y();
    const double det = J.determinant();
    require(det > 0.0, ErrorCode::config, "FemSpaces: triangle with non-positive orientation");
    ElementGeometry g;
    g.area = 0.5 * det;
    const Mat Jti = J.inverse().transpose();
    g.grad[1] = Jti * Eigen::Vector2d(1.0, 0.0);
    g.grad[2] = Jti * Eigen::Vector2d(0.0, 1.0);
    g.grad[0] = -g.grad[1] - g.grad[2];
    return g;
}

} // namespace

double trace_norm(const DiscreteSpace& space, const Mat& boundary_mass) {
    require_arg(boundary_mass.rows() == space.dim() && boundary_mass.cols() == space.dim(),
                "trace_norm: boundary mass shape mismatch");
    if (boundary_mass.isZero(0.0)) return 0.0;
    Vec x = Vec::Ones(space.dim());
    double lambda = 0.0;
    const int max_iters = 10000;
    for (int i = 0; i < max_iters; ++i) {
        Vec y = space.solve_strong(boundary_mass * x);
        const double ny = y.norm();
        if (ny <= 1e-300) return 0.0;
        y /= ny;
        const double num = y.dot(boundary_mass * y);
        const double den = y.dot(space.gram_strong() * y);
        const double lambda_new = num / den;
        const bool done = std::abs(lambda_new - lambda) <= 1e-10 * std::max(1e-30, lambda_new);
        lambda = lambda_new;
        x = y;
        if (done && i > 2) return std::sqrt(std::max(0.0, lambda));
    }
    throw NonConvergence("trace_norm (power iteration)", -1, lambda, max_iters);
}

Eigen::Vector2d FemSpaces::v_at_node(const Vec& vcoef, int node) const {
    const int d = vdof_of_node[node];
    if (d < 0) return Eigen::Vector2d::Zero();
    return {vcoef[2 * d], vcoef[2 * d + 1]};
}

double FemSpaces::e_at_node(const Vec& ecoef, int node) const {
    const int d = edof_of_node[node];
    return d < 0 ? 0.0 : ecoef[d];
}

FemSpaces FemSpaces::build(const Mesh2D& mesh) {
    const int nn = static_cast<int>(mesh.nodes.size());
    require(!mesh.triangles.empty(), ErrorCode::config, "FemSpaces: empty mesh");

    // boundary classification from the tagged edges
    std::vector<bool> on_dirichlet(nn, false), on_neumann(nn, false), on_contact(nn, false);
    double dirichlet_length = 0.0;
    for (const auto& e : mesh.boundary_edges) {
        const double len = (mesh.nodes[e.a] - mesh.nodes[e.b]).norm();
        switch (e.tag) {
        case BoundaryTag::dirichlet:
            on_dirichlet[e.a] = on_dirichlet[e.b] = true;
            dirichlet_length += len;
            break;
        case BoundaryTag::neumann:
            on_neumann[e.a] = on_neumann[e.b] = true;
            break;
        case BoundaryTag::contact:
            on_contact[e.a] = on_contact[e.b] = true;
            break;
        }
    }
    require(dirichlet_length > 0.0, ErrorCode::config,
            "FemSpaces: Dirichlet part must have positive length");

    FemSpaces fem;
    fem.mesh = mesh;
    fem.vdof_of_node.assign(nn, -1);
    fem.edof_of_node.assign(nn, -1);
    int nv = 0, ne = 0;
    for (int n = 0; n < nn; ++n) {
        if (!on_dirichlet[n]) fem.vdof_of_node[n] = nv++;
        if (!on_dirichlet[n] && !on_neumann[n]) fem.edof_of_node[n] = ne++;
    }
    require(nv >= 1 && ne >= 1, ErrorCode::config, "FemSpaces: no retained dofs");

    // nodal P1 matrices on the full node set
    Mat Ks = Mat::Zero(nn, nn); // scalar gradient stiffness
    Mat Ms = Mat::Zero(nn, nn); // scalar consistent mass
    const int nvd = 2 * nv;
    Mat Keps = Mat::Zero(nvd, nvd);
    Mat Kdiv = Mat::Zero(nvd, nvd);
    Mat Kgrad = Mat::Zero(nvd, nvd);
    Mat Mv = Mat::Zero(nvd, nvd);

    for (const auto& tri : mesh.triangles) {
        const ElementGeometry g = element_geometry(mesh, tri);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const double kab = g.area * g.grad[a].dot(g.grad[b]);
                const double mab = g.area / 12.0 * (a == b ? 2.0 : 1.0);
                Ks(tri[a], tri[b]) += kab;
                Ms(tri[a], tri[b]) += mab;

                const int da = fem.vdof_of_node[tri[a]];
                const int db = fem.vdof_of_node[tri[b]];
                if (da < 0 || db < 0) continue;
                const Eigen::Vector2d& ga = g.grad[a];
                const Eigen::Vector2d& gb = g.grad[b];
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) {
                        // (eps(phi_a e_i), eps(phi_b e_j))
                        double eps = 0.5 * ga[j] * gb[i];
                        if (i == j) eps += 0.5 * ga.dot(gb);
                        Keps(2 * da + i, 2 * db + j) += g.area * eps;
                        Kdiv(2 * da + i, 2 * db + j) += g.area * ga[i] * gb[j];
                        if (i == j) {
                            Kgrad(2 * da + i, 2 * db + j) += kab;
                            Mv(2 * da + i, 2 * db + j) += mab;
                        }
                    }
                }
            }
        }
    }

    // restricted scalar matrices
    Mat Kse = Mat::Zero(ne, ne), Mse = Mat::Zero(ne, ne);
    for (int a = 0; a < nn; ++a) {
        const int da = fem.edof_of_node[a];
        if (da < 0) continue;
        for (int b = 0; b < nn; ++b) {
            const int db = fem.edof_of_node[b];
            if (db < 0) continue;
            Kse(da, db) = Ks(a, b);
            Mse(da, db) = Ms(a, b);
        }
    }

    fem.strain_stiffness = Keps;
    fem.div_stiffness = Kdiv;
    fem.V = std::make_shared<DiscreteSpace>(nvd, Mat(Kgrad + Mv), Mv, "V");
    fem.E = std::make_shared<DiscreteSpace>(ne, Mat(Kse + Mse), Mse, "E");
    fem.X = std::make_shared<DiscreteSpace>(ne, Mse, Mse, "X");

    // contact boundary frame with lumped weights
    std::vector<double> weight(nn, 0.0);
    std::vector<Eigen::Vector2d> normal_acc(nn, Eigen::Vector2d::Zero());
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag != BoundaryTag::contact) continue;
        const Eigen::Vector2d d = mesh.nodes[e.b] - mesh.nodes[e.a];
        const double len = d.norm();
        const Eigen::Vector2d nrm(d.y() / len, -d.x() / len); // outward for CCW domains
        weight[e.a] += 0.5 * len;
        weight[e.b] += 0.5 * len;
        normal_acc[e.a] += nrm;
        normal_acc[e.b] += nrm;
    }
    for (int n = 0; n < nn; ++n) {
        if (!on_contact[n] || fem.vdof_of_node[n] < 0 || fem.edof_of_node[n] < 0) continue;
        fem.contact_nodes.push_back(n);
    }
    std::sort(fem.contact_nodes.begin(), fem.contact_nodes.end(), [&mesh](int a, int b) {
        return mesh.nodes[a].x() < mesh.nodes[b].x();
    });
    for (int n : fem.contact_nodes) {
        fem.contact_weight.push_back(weight[n]);
        Eigen::Vector2d nu = normal_acc[n].normalized();
        fem.contact_normal.push_back(nu);
        fem.contact_tangent.push_back(Eigen::Vector2d(-nu.y(), nu.x()));
    }

    // nodal averaging regularization (1/2 self, 1/4 each neighbor, renormalized)
    const int nc = static_cast<int>(fem.contact_nodes.size());
    fem.regularizer = Mat::Zero(std::max(nc, 1), std::max(nc, 1));
    for (int p = 0; p < nc; ++p) {
        double self = 0.5, total = 0.5;
        if (p > 0) total += 0.25;
        if (p + 1 < nc) total += 0.25;
        fem.regularizer(p, p) = self / total;
        if (p > 0) fem.regularizer(p, p - 1) = 0.25 / total;
        if (p + 1 < nc) fem.regularizer(p, p + 1) = 0.25 / total;
    }

    // trace norms against the lumped contact boundary mass
    Mat Bv = Mat::Zero(nvd, nvd);
    Mat Be = Mat::Zero(ne, ne);
    for (int p = 0; p < nc; ++p) {
        const int node = fem.contact_nodes[p];
        const int dv = fem.vdof_of_node[node];
        const int de = fem.edof_of_node[node];
        Bv(2 * dv, 2 * dv) = fem.contact_weight[p];
        Bv(2 * dv + 1, 2 * dv + 1) = fem.contact_weight[p];
        Be(de, de) = fem.contact_weight[p];
    }
    fem.trace_norm_V = nc > 0 ? trace_norm(*fem.V, Bv) : 0.0;
    fem.trace_norm_E = nc > 0 ? trace_norm(*fem.E, Be) : 0.0;
    return fem;
}

} // namespace hdsys::contact
