#ifndef FIBERAMP_MESH_HPP
#define FIBERAMP_MESH_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fiberamp/config.hpp"
#include "fiberamp/params.hpp"

namespace fiberamp {

/// Layered structured quadrilateral mesh of the (x, z) slab:
/// x in [-r_clad, r_clad], z in [0, L~ + L_pml]. Elements are indexed by
/// (ix, iz) with iz the z-layer (column). Edges carry a global orientation:
/// transverse edges (parallel to x, at a layer interface) have global normal
/// +z; longitudinal edges (parallel to z) have global normal +x.
struct Mesh {
    struct Elem {
        double x0, x1, z0, z1;
        int ix, iz;
        bool core;
        bool pml;
        int edge[4];  // bottom (z=z0), right (x=x1), top (z=z1), left (x=x0)
    };
    struct Edge {
        bool transverse;  // parallel to x (at constant z) if true
        double x0, x1, z0, z1;
        int elem_minus = -1;  // on the negative side of the global normal
        int elem_plus = -1;   // on the positive side
        int interface = -1;   // for transverse edges: z-interface index
        int column = -1;      // for longitudinal edges: z-column index
        bool boundary() const { return elem_minus < 0 || elem_plus < 0; }
    };

    std::vector<Elem> elems;
    std::vector<Edge> edges;
    std::vector<double> x_breaks, z_breaks;
    int n_x = 0;           // transverse element count
    int n_z = 0;           // total z columns (interior + PML)
    int n_z_interior = 0;  // columns with z < z_pml_start
    double r_core_hat = 0, r_clad_hat = 0;
    double L_tilde = 0, pml_length = 0;

    int n_interfaces() const { return n_z + 1; }
    int elem_id(int ix, int iz) const { return iz * n_x + ix; }
    int transverse_edge(int ix, int iz) const { return iz * n_x + ix; }
    int longitudinal_edge(int jx, int iz) const {
        return (n_z + 1) * n_x + iz * (n_x + 1) + jx;
    }
    /// vertex grid id; vertices exist at (x_breaks[jx], z_breaks[iz])
    int vertex_id(int jx, int iz) const { return iz * (n_x + 1) + jx; }
    int n_vertices() const { return (n_x + 1) * (n_z + 1); }

    /// Element containing (x, z); points on breaks resolve to the lower cell.
    int locate(double x, double z) const {
        auto find = [](const std::vector<double>& b, double v) {
            int lo = 0, hi = static_cast<int>(b.size()) - 2;
            while (lo < hi) {
                int mid = (lo + hi + 1) / 2;
                if (v >= b[mid]) lo = mid;
                else hi = mid - 1;
            }
            return lo;
        };
        if (x < x_breaks.front() || x > x_breaks.back() || z < z_breaks.front() ||
            z > z_breaks.back())
            throw std::out_of_range("Mesh::locate: point outside domain");
        return elem_id(find(x_breaks, x), find(z_breaks, z));
    }
};

/// Builds the layered mesh. Transverse breakpoints always include +-r_core;
/// half the transverse elements resolve the core, a quarter each cladding
/// side (optionally geometrically graded away from the core).
inline Mesh build_layered_mesh(const SimulationConfig& cfg, const NondimParams& nd,
                               const Scales& scales, const PhysicalParams& phys) {
    if (cfg.num_wavelengths < 1 || cfg.n_transverse_elems < 4 || cfg.pml_wavelengths < 1 ||
        cfg.elems_per_wavelength < 1)
        throw config_error("build_layered_mesh: invalid element counts");

    Mesh m;
    m.r_core_hat = phys.r_core / scales.l_0;
    m.r_clad_hat = phys.r_clad / scales.l_0;
    m.L_tilde = nd.L_tilde;
    m.pml_length = cfg.pml_wavelengths * nd.lambda_hat_s;
    m.n_x = cfg.n_transverse_elems;
    m.n_z_interior = cfg.num_wavelengths * cfg.elems_per_wavelength;
    int n_z_pml = cfg.pml_wavelengths * cfg.elems_per_wavelength;
    m.n_z = m.n_z_interior + n_z_pml;

    // transverse partition: n_core elements in [-r_core, r_core], n_side per
    // cladding side
    int n_core = m.n_x / 2;
    if (n_core % 2 != 0) --n_core;
    if (n_core < 2) n_core = 2;
    int n_side = (m.n_x - n_core) / 2;
    if (n_side < 1 || n_core + 2 * n_side != m.n_x)
        throw config_error("build_layered_mesh: cannot split transverse elements");

    std::vector<double> side;  // widths from core boundary outward
    double clad_width = m.r_clad_hat - m.r_core_hat;
    if (cfg.transverse_grading == TransverseGrading::geometric && n_side > 1) {
        const double ratio = 2.0;
        double w0 = clad_width * (ratio - 1.0) / (std::pow(ratio, n_side) - 1.0);
        double w = w0;
        for (int i = 0; i < n_side; ++i, w *= ratio) side.push_back(w);
    } else {
        side.assign(n_side, clad_width / n_side);
    }

    m.x_breaks.push_back(-m.r_clad_hat);
    {
        double x = -m.r_clad_hat;
        for (int i = n_side - 1; i >= 1; --i) {
            x += side[i];
            m.x_breaks.push_back(x);
        }
        m.x_breaks.push_back(-m.r_core_hat);  // exact
        for (int i = 1; i < n_core; ++i)
            m.x_breaks.push_back(-m.r_core_hat + 2.0 * m.r_core_hat * i / n_core);
        m.x_breaks.push_back(m.r_core_hat);  // exact
        x = m.r_core_hat;
        for (int i = 1; i <= n_side; ++i) {
            x += side[i - 1];
            m.x_breaks.push_back(x);
        }
        m.x_breaks.back() = m.r_clad_hat;  // exact
    }

    double dz = nd.lambda_hat_s / cfg.elems_per_wavelength;
    for (int i = 0; i <= m.n_z; ++i) m.z_breaks.push_back(i * dz);

    m.elems.resize(static_cast<std::size_t>(m.n_x) * m.n_z);
    for (int iz = 0; iz < m.n_z; ++iz) {
        for (int ix = 0; ix < m.n_x; ++ix) {
            Mesh::Elem& e = m.elems[m.elem_id(ix, iz)];
            e.x0 = m.x_breaks[ix];
            e.x1 = m.x_breaks[ix + 1];
            e.z0 = m.z_breaks[iz];
            e.z1 = m.z_breaks[iz + 1];
            e.ix = ix;
            e.iz = iz;
            double xc = 0.5 * (e.x0 + e.x1);
            e.core = std::abs(xc) < m.r_core_hat;
            e.pml = iz >= m.n_z_interior;
            e.edge[0] = m.transverse_edge(ix, iz);
            e.edge[1] = m.longitudinal_edge(ix + 1, iz);
            e.edge[2] = m.transverse_edge(ix, iz + 1);
            e.edge[3] = m.longitudinal_edge(ix, iz);
        }
    }

    m.edges.resize(static_cast<std::size_t>(m.n_x) * (m.n_z + 1) +
                   static_cast<std::size_t>(m.n_x + 1) * m.n_z);
    for (int iz = 0; iz <= m.n_z; ++iz) {
        for (int ix = 0; ix < m.n_x; ++ix) {
            Mesh::Edge& ed = m.edges[m.transverse_edge(ix, iz)];
            ed.transverse = true;
            ed.x0 = m.x_breaks[ix];
            ed.x1 = m.x_breaks[ix + 1];
            ed.z0 = ed.z1 = m.z_breaks[iz];
            ed.interface = iz;
            ed.elem_minus = iz > 0 ? m.elem_id(ix, iz - 1) : -1;
            ed.elem_plus = iz < m.n_z ? m.elem_id(ix, iz) : -1;
        }
    }
    for (int iz = 0; iz < m.n_z; ++iz) {
        for (int jx = 0; jx <= m.n_x; ++jx) {
            Mesh::Edge& ed = m.edges[m.longitudinal_edge(jx, iz)];
            ed.transverse = false;
            ed.x0 = ed.x1 = m.x_breaks[jx];
            ed.z0 = m.z_breaks[iz];
            ed.z1 = m.z_breaks[iz + 1];
            ed.column = iz;
            ed.elem_minus = jx > 0 ? m.elem_id(jx - 1, iz) : -1;
            ed.elem_plus = jx < m.n_x ? m.elem_id(jx, iz) : -1;
        }
    }
    return m;
}

}  // namespace fiberamp

#endif
