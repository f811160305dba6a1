#include "hdsys/contact.hpp"

namespace hdsys::contact {

Mesh2D Mesh2D::rectangle(double Lx, double Ly, int nx, int ny) {
    require_arg(Lx > 0.0 && Ly > 0.0, "Mesh2D: dimensions must be positive");
    require_arg(nx >= 1 && ny >= 1, "Mesh2D: need at least one cell per direction");

    Mesh2D m;
    m.Lx = Lx;
    m.Ly = Ly;
    m.nx = nx;
    m.ny = ny;
    const double hx = Lx / nx, hy = Ly / ny;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.emplace_back(i * hx, j * hy);

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int n00 = m.node_id(i, j), n10 = m.node_id(i + 1, j);
            const int n01 = m.node_id(i, j + 1), n11 = m.node_id(i + 1, j + 1);
            const double cx = (i + 0.5) * hx;
            if (cx <= 0.5 * Lx) {
                // diagonal n00 - n11
                m.triangles.push_back({n00, n10, n11});
                m.triangles.push_back({n00, n11, n01});
            } else {
                // mirrored diagonal n10 - n01
                m.triangles.push_back({n00, n10, n01});
                m.triangles.push_back({n10, n11, n01});
            }
        }
    }

    for (int i = 0; i < nx; ++i)
        m.boundary_edges.push_back({m.node_id(i, 0), m.node_id(i + 1, 0), BoundaryTag::contact});
    for (int i = 0; i < nx; ++i)
        m.boundary_edges.push_back(
            {m.node_id(i, ny), m.node_id(i + 1, ny), BoundaryTag::neumann});
    for (int j = 0; j < ny; ++j) {
        m.boundary_edges.push_back({m.node_id(0, j), m.node_id(0, j + 1), BoundaryTag::dirichlet});
        m.boundary_edges.push_back(
            {m.node_id(nx, j), m.node_id(nx, j + 1), BoundaryTag::dirichlet});
    }
    return m;
}

int Mesh2D::mirror_node(int id) const {
    const int i = id % (nx + 1);
    const int j = id / (nx + 1);
    return node_id(nx - i, j);
}

} // namespace hdsys::contact
