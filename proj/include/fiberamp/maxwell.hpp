#ifndef FIBERAMP_MAXWELL_HPP
#define FIBERAMP_MAXWELL_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberamp/fespace.hpp"
#include "fiberamp/mesh.hpp"
#include "fiberamp/modes.hpp"
#include "fiberamp/params.hpp"
#include "fiberamp/solver.hpp"

namespace fiberamp {

using cplx = std::complex<double>;

class numerical_breakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stretched-coordinate PML profile along z (cubic monomial). With the
/// e^{+i omega t} ansatz a decaying layer needs Im(s) < 0.
struct PmlSpec {
    double z_start = 0.0;
    double length = 0.0;  // <= 0 disables the PML
    double sigma_max = 40.0;
    double omega_hat = 1.0;
};

inline cplx pml_stretch(double z, const PmlSpec& pml) {
    if (pml.length <= 0.0 || z <= pml.z_start) return cplx(1.0, 0.0);
    double t = (z - pml.z_start) / pml.length;
    return cplx(1.0, -pml.sigma_max * t * t * t / pml.omega_hat);
}

/// One scaled time-harmonic Maxwell system (signal or pump) in the 2D TE
/// slab reduction: E is the out-of-plane electric field, H = (H_x, H_z).
/// Material callables receive the element id plus physical coordinates.
struct MaxwellProblem {
    const Mesh* mesh = nullptr;
    int p = 5;
    int dp = 2;
    double omega_hat = 0.0;
    double gain_factor = 0.0;  // l_0 g_0 * g~_a
    std::function<double(int, double, double)> n_of;  // refractive index
    std::function<double(int, double, double)> g_of;  // non-dimensional gain (core-masked)
    PmlSpec pml;

    // Boundary data for the physical problem: inlet trace coefficients per
    // inlet edge column (1D h1 coefficients of the launched mode); remaining
    // boundary edges are PEC (E = 0).
    std::vector<Eigen::VectorXd> inlet_trace;

    // Verification hooks: volumetric loads of the first-order system and an
    // exact-solution Dirichlet trace on the whole boundary. Unused (null) in
    // the physical problem.
    std::function<cplx(double, double)> f1, f2, f3;
    std::function<cplx(double, double)> dirichlet_E;
};

/// Broken L^2 coefficients for (E, H_x, H_z) plus fully resolved skeleton
/// traces; edge_E holds 1D h1 coefficients, edge_H 1D Legendre coefficients
/// of the tangential-H trace with respect to the global edge normal.
struct FieldSolution {
    int p = 0;
    std::vector<Eigen::VectorXcd> E, Hx, Hz;  // per element, (p+1)^2 tensor Legendre
    std::vector<Eigen::VectorXcd> edge_E;     // per edge, p+1
    std::vector<Eigen::VectorXcd> edge_H;     // per edge, p+1

    cplx eval(const std::vector<Eigen::VectorXcd>& coef, const Mesh& mesh, int e, double x,
              double z) const {
        const Mesh::Elem& el = mesh.elems[e];
        double xi = (2.0 * x - el.x0 - el.x1) / (el.x1 - el.x0);
        double eta = (2.0 * z - el.z0 - el.z1) / (el.z1 - el.z0);
        std::vector<double> vx(p + 1), vz(p + 1);
        l2_point(p, xi, vx.data());
        l2_point(p, eta, vz.data());
        cplx s = 0.0;
        const Eigen::VectorXcd& c = coef[e];
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i) s += c[i + (p + 1) * j] * vx[i] * vz[j];
        return s;
    }
    cplx eval_E(const Mesh& mesh, int e, double x, double z) const {
        return eval(E, mesh, e, x, z);
    }
    cplx eval_Hx(const Mesh& mesh, int e, double x, double z) const {
        return eval(Hx, mesh, e, x, z);
    }
    cplx eval_Hz(const Mesh& mesh, int e, double x, double z) const {
        return eval(Hz, mesh, e, x, z);
    }
};

namespace dpg {

/// Reference-element tabulations shared by every element of a mesh.
struct RefTabs {
    int p, dp, nq1;
    QuadratureRule rule1;
    Basis test1;   // Legendre, order p + dp
    Basis trial1;  // Legendre, order p
    Basis eh1;     // h1, order p (edge E traces)
    Basis eleg;    // Legendre, order p (edge H traces)
    int n_t, n2;   // scalar test / trial dims on the quad
    Eigen::MatrixXd Tv, Tdxi, Tdeta;  // nq2 x n_t
    Eigen::MatrixXd Uv;               // nq2 x n2
    Eigen::MatrixXd R[4];             // nq1 x n_t, side restrictions
    Eigen::VectorXd w2;               // tensor weights

    RefTabs(int p_, int dp_) : p(p_), dp(dp_) {
        int pt = p + dp;
        rule1 = quadrature_rule(2 * pt + 2);
        nq1 = rule1.size();
        test1 = tabulate(BasisFamily::l2, pt, rule1);
        trial1 = tabulate(BasisFamily::l2, p, rule1);
        eh1 = tabulate(BasisFamily::h1, p, rule1);
        eleg = tabulate(BasisFamily::l2, p, rule1);
        n_t = (pt + 1) * (pt + 1);
        n2 = (p + 1) * (p + 1);
        int nq2 = nq1 * nq1;
        Tv.resize(nq2, n_t);
        Tdxi.resize(nq2, n_t);
        Tdeta.resize(nq2, n_t);
        Uv.resize(nq2, n2);
        w2.resize(nq2);
        for (int qz = 0; qz < nq1; ++qz) {
            for (int qx = 0; qx < nq1; ++qx) {
                int q = qx + nq1 * qz;
                w2[q] = rule1.wts[qx] * rule1.wts[qz];
                for (int j = 0; j <= pt; ++j) {
                    for (int i = 0; i <= pt; ++i) {
                        int a = i + (pt + 1) * j;
                        Tv(q, a) = test1.val(i, qx) * test1.val(j, qz);
                        Tdxi(q, a) = test1.der(i, qx) * test1.val(j, qz);
                        Tdeta(q, a) = test1.val(i, qx) * test1.der(j, qz);
                    }
                }
                for (int j = 0; j <= p; ++j)
                    for (int i = 0; i <= p; ++i)
                        Uv(q, i + (p + 1) * j) = trial1.val(i, qx) * trial1.val(j, qz);
            }
        }
        // side restrictions of the test basis: bottom, right, top, left
        for (int side = 0; side < 4; ++side) R[side].resize(nq1, n_t);
        auto endv = [](int j, bool plus) { return plus ? 1.0 : (j % 2 == 0 ? 1.0 : -1.0); };
        for (int q = 0; q < nq1; ++q) {
            for (int j = 0; j <= pt; ++j) {
                for (int i = 0; i <= pt; ++i) {
                    int a = i + (pt + 1) * j;
                    R[0](q, a) = test1.val(i, q) * endv(j, false);  // eta = -1
                    R[2](q, a) = test1.val(i, q) * endv(j, true);   // eta = +1
                    R[3](q, a) = endv(i, false) * test1.val(j, q);  // xi = -1
                    R[1](q, a) = endv(i, true) * test1.val(j, q);   // xi = +1
                }
            }
        }
    }
};

/// Raw element matrices of the broken ultraweak form: stiffness B
/// (test x trial), graph-norm Gram G, load l. Trial layout: E, H_x, H_z
/// (broken L^2), then per side (bottom/right/top/left) p+1 E-trace and
/// p+1 H-trace coefficients.
struct ElementMatrices {
    Eigen::MatrixXcd B;
    Eigen::MatrixXcd G;
    Eigen::VectorXcd l;
    int n_interior, n_trace;
};

inline ElementMatrices assemble_element(const MaxwellProblem& prob, const RefTabs& rt, int e) {
    const Mesh& mesh = *prob.mesh;
    const Mesh::Elem& el = mesh.elems[e];
    const int nq1 = rt.nq1, nq2 = nq1 * nq1, n_t = rt.n_t, n2 = rt.n2;
    const int n_edge = rt.p + 1;
    const int n_i = 3 * n2, n_b = 8 * n_edge;
    const double hx = el.x1 - el.x0, hz = el.z1 - el.z0;
    const double J = 0.25 * hx * hz;
    const double dxf = 2.0 / hx, dzf = 2.0 / hz;

    // material and PML samples at the tensor quadrature points
    Eigen::VectorXcd sW(nq2), scEW(nq2);
    Eigen::VectorXd W(nq2);
    Eigen::VectorXcd s_q(nq2), cE_q(nq2);
    Eigen::VectorXcd load1(nq2), load2(nq2), load3(nq2);
    const bool has_load = static_cast<bool>(prob.f1);
    for (int qz = 0; qz < nq1; ++qz) {
        double z = 0.5 * (el.z0 + el.z1) + 0.5 * hz * rt.rule1.pts[qz];
        cplx s = pml_stretch(z, prob.pml);
        for (int qx = 0; qx < nq1; ++qx) {
            int q = qx + nq1 * qz;
            double x = 0.5 * (el.x0 + el.x1) + 0.5 * hx * rt.rule1.pts[qx];
            double n = prob.n_of(e, x, z);
            double g = prob.g_of ? prob.g_of(e, x, z) : 0.0;
            cplx cE = cplx(0.0, prob.omega_hat * n * n) - n * prob.gain_factor * g;
            W[q] = rt.w2[q] * J;
            s_q[q] = s;
            cE_q[q] = cE;
            sW[q] = s * W[q];
            scEW[q] = s * cE * W[q];
            if (has_load) {
                load1[q] = prob.f1(x, z);
                load2[q] = prob.f2(x, z);
                load3[q] = prob.f3(x, z);
            }
        }
    }

    ElementMatrices em;
    em.n_interior = n_i;
    em.n_trace = n_b;
    em.B = Eigen::MatrixXcd::Zero(3 * n_t, n_i + n_b);
    em.l = Eigen::VectorXcd::Zero(3 * n_t);

    // scaled derivative tabulations
    Eigen::MatrixXd Tx = dxf * rt.Tdxi;
    Eigen::MatrixXd Tz = dzf * rt.Tdeta;

    const cplx iw(0.0, prob.omega_hat);
    auto rows_v = Eigen::seqN(0, n_t);
    auto rows_wx = Eigen::seqN(n_t, n_t);
    auto rows_wz = Eigen::seqN(2 * n_t, n_t);
    auto cols_E = Eigen::seqN(0, n2);
    auto cols_Hx = Eigen::seqN(n2, n2);
    auto cols_Hz = Eigen::seqN(2 * n2, n2);

    // volume terms of the broken ultraweak form (z-derivative equations
    // pre-multiplied by the PML stretch s)
    em.B(rows_v, cols_E) = -rt.Tv.transpose() * (scEW.asDiagonal() * rt.Uv);
    em.B(rows_v, cols_Hx) = (-Tz.transpose() * (W.asDiagonal() * rt.Uv)).cast<cplx>();
    em.B(rows_v, cols_Hz) = Tx.transpose() * (sW.asDiagonal() * rt.Uv);
    em.B(rows_wx, cols_E) = (Tz.transpose() * (W.asDiagonal() * rt.Uv)).cast<cplx>();
    em.B(rows_wx, cols_Hx) = iw * (rt.Tv.transpose() * (sW.asDiagonal() * rt.Uv));
    em.B(rows_wz, cols_E) = (-Tx.transpose() * (W.asDiagonal() * rt.Uv)).cast<cplx>();
    em.B(rows_wz, cols_Hz) = iw * (rt.Tv.transpose() * (W.asDiagonal() * rt.Uv)).cast<cplx>();

    // skeleton terms; sgn relates the element outward normal to the global
    // edge normal (+z for transverse, +x for longitudinal edges)
    const double sgn[4] = {-1.0, +1.0, +1.0, -1.0};
    for (int side = 0; side < 4; ++side) {
        bool transverse = (side == 0 || side == 2);
        double Je = 0.5 * (transverse ? hx : hz);
        int colE0 = n_i + side * 2 * n_edge;
        int colH0 = colE0 + n_edge;
        for (int q = 0; q < nq1; ++q) {
            double wq = rt.rule1.wts[q] * Je;
            // <H-trace, v>
            for (int a = 0; a < n_t; ++a) {
                double tv = rt.R[side](q, a);
                if (tv == 0.0) continue;
                for (int b = 0; b < n_edge; ++b)
                    em.B(a, colH0 + b) += sgn[side] * wq * tv * rt.eleg.val(b, q);
            }
            // <E-trace, tangential w>: +-w_x on transverse sides, +-w_z on
            // longitudinal sides
            double cf = transverse ? (side == 0 ? +1.0 : -1.0) : (side == 1 ? +1.0 : -1.0);
            int rblock = transverse ? n_t : 2 * n_t;
            for (int a = 0; a < n_t; ++a) {
                double tv = rt.R[side](q, a);
                if (tv == 0.0) continue;
                for (int b = 0; b < n_edge; ++b)
                    em.B(rblock + a, colE0 + b) += cf * wq * tv * rt.eh1.val(b, q);
            }
        }
    }

    if (has_load) {
        Eigen::VectorXcd sl1 = s_q.cwiseProduct(load1).cwiseProduct(W.cast<cplx>());
        Eigen::VectorXcd sl2 = s_q.cwiseProduct(load2).cwiseProduct(W.cast<cplx>());
        Eigen::VectorXcd l3 = load3.cwiseProduct(W.cast<cplx>());
        em.l(rows_v) = rt.Tv.transpose() * sl1;
        em.l(rows_wx) = rt.Tv.transpose() * sl2;
        em.l(rows_wz) = rt.Tv.transpose() * l3;
    }

    // adjoint graph norm Gram: ||A* v||^2 + ||v||^2
    Eigen::VectorXcd sbar = s_q.conjugate();
    Eigen::VectorXcd scEbar = s_q.conjugate().cwiseProduct(cE_q.conjugate());
    Eigen::MatrixXcd M(nq2, 3 * n_t);
    em.G = Eigen::MatrixXcd::Zero(3 * n_t, 3 * n_t);
    auto accumulate = [&](const Eigen::MatrixXcd& Mc) {
        em.G.noalias() += Mc.adjoint() * (W.asDiagonal() * Mc);
    };
    // (A* v)_E = -conj(s cE) v + dz wx - dx wz
    M.setZero();
    M(Eigen::all, rows_v) = -(scEbar.asDiagonal() * rt.Tv.cast<cplx>());
    M(Eigen::all, rows_wx) = Tz.cast<cplx>();
    M(Eigen::all, rows_wz) = -Tx.cast<cplx>();
    accumulate(M);
    // (A* v)_x = -dz v - i w conj(s) wx
    M.setZero();
    M(Eigen::all, rows_v) = -Tz.cast<cplx>();
    M(Eigen::all, rows_wx) = -iw * (sbar.asDiagonal() * rt.Tv.cast<cplx>());
    accumulate(M);
    // (A* v)_z = conj(s) dx v - i w wz
    M.setZero();
    M(Eigen::all, rows_v) = sbar.asDiagonal() * Tx.cast<cplx>();
    M(Eigen::all, rows_wz) = -iw * rt.Tv.cast<cplx>();
    accumulate(M);
    // L^2 identity term, block diagonal
    Eigen::MatrixXd mass = rt.Tv.transpose() * (W.asDiagonal() * rt.Tv);
    for (int b = 0; b < 3; ++b)
        em.G.block(b * n_t, b * n_t, n_t, n_t) += mass.cast<cplx>();

    return em;
}

/// Global numbering of the skeleton trace unknowns, grouped by z-layer so
/// the condensed system is block tridiagonal. E traces on boundary edges
/// are Dirichlet (value storage included); H traces are always free.
struct TraceDofMap {
    int p;
    int n_bub;  // p - 1
    std::vector<int> vertex_dof;                // -1 when constrained
    std::vector<int> ebub_start;                // per edge; -1 when constrained
    std::vector<int> h_start;                   // per edge
    std::vector<cplx> vertex_val;               // constrained vertex values
    std::vector<Eigen::VectorXcd> edge_E_bc;    // constrained edge E values (p+1)
    std::vector<int> block_sizes;
    int n_free = 0;

    TraceDofMap(const Mesh& mesh, const MaxwellProblem& prob) : p(prob.p), n_bub(prob.p - 1) {
        vertex_dof.assign(mesh.n_vertices(), -2);
        ebub_start.assign(mesh.edges.size(), -2);
        h_start.assign(mesh.edges.size(), -2);
        vertex_val.assign(mesh.n_vertices(), cplx(0.0));
        edge_E_bc.assign(mesh.edges.size(), Eigen::VectorXcd());

        int next = 0;
        auto number_edge = [&](int eid) {
            const Mesh::Edge& ed = mesh.edges[eid];
            if (ed.boundary()) {
                ebub_start[eid] = -1;
                edge_E_bc[eid] = dirichlet_values(mesh, prob, eid);
            } else {
                ebub_start[eid] = next;
                next += n_bub;
            }
            h_start[eid] = next;
            next += p + 1;
        };
        auto number_vertex = [&](int jx, int iz) {
            int vid = mesh.vertex_id(jx, iz);
            bool bnd = (jx == 0 || jx == mesh.n_x || iz == 0 || iz == mesh.n_z);
            if (bnd) {
                vertex_dof[vid] = -1;  // value filled from an adjacent edge below
            } else {
                vertex_dof[vid] = next++;
            }
        };

        block_sizes.clear();
        for (int iz = 0; iz <= mesh.n_z; ++iz) {
            int start = next;
            for (int ix = 0; ix < mesh.n_x; ++ix) number_edge(mesh.transverse_edge(ix, iz));
            for (int jx = 0; jx <= mesh.n_x; ++jx) number_vertex(jx, iz);
            if (iz < mesh.n_z)
                for (int jx = 0; jx <= mesh.n_x; ++jx)
                    number_edge(mesh.longitudinal_edge(jx, iz));
            block_sizes.push_back(next - start);
        }
        n_free = next;

        // constrained vertex values from the Dirichlet edge data
        for (std::size_t eid = 0; eid < mesh.edges.size(); ++eid) {
            if (ebub_start[eid] != -1) continue;
            const Mesh::Edge& ed = mesh.edges[eid];
            auto [va, vb] = endpoints(mesh, static_cast<int>(eid));
            if (vertex_dof[va] == -1) vertex_val[va] = edge_E_bc[eid][0];
            if (vertex_dof[vb] == -1) vertex_val[vb] = edge_E_bc[eid][1];
        }
    }

    /// endpoint vertex ids (in increasing edge-parameter order)
    static std::pair<int, int> endpoints(const Mesh& mesh, int eid) {
        const Mesh::Edge& ed = mesh.edges[eid];
        if (ed.transverse) {
            int iz = ed.interface;
            int ix = eid - mesh.transverse_edge(0, iz);
            return {mesh.vertex_id(ix, iz), mesh.vertex_id(ix + 1, iz)};
        }
        int k = eid - mesh.longitudinal_edge(0, 0);
        int iz = k / (mesh.n_x + 1);
        int jx = k % (mesh.n_x + 1);
        return {mesh.vertex_id(jx, iz), mesh.vertex_id(jx, iz + 1)};
    }

    /// Dirichlet E-trace coefficients of a boundary edge.
    static Eigen::VectorXcd dirichlet_values(const Mesh& mesh, const MaxwellProblem& prob,
                                             int eid) {
        const Mesh::Edge& ed = mesh.edges[eid];
        int p = prob.p;
        if (prob.dirichlet_E) {
            auto fn = prob.dirichlet_E;
            return project_edge(mesh, eid, p, fn);
        }
        if (ed.transverse && ed.interface == 0 && !prob.inlet_trace.empty()) {
            int ix = eid - mesh.transverse_edge(0, 0);
            return prob.inlet_trace[ix].cast<cplx>();
        }
        return Eigen::VectorXcd::Zero(p + 1);  // PEC / outlet
    }

    /// Constrained L^2 projection of a scalar function onto the h1 edge
    /// space (endpoint interpolation + bubble least squares).
    static Eigen::VectorXcd project_edge(const Mesh& mesh, int eid,
                                         int p, const std::function<cplx(double, double)>& fn) {
        const Mesh::Edge& ed = mesh.edges[eid];
        QuadratureRule rule = gauss_rule(p + 3);
        Basis b = tabulate(BasisFamily::h1, p, rule);
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(p + 1);
        c[0] = fn(ed.x0, ed.z0);
        c[1] = fn(ed.x1, ed.z1);
        if (p >= 2) {
            int nb = p - 1;
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, nb);
            Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nb);
            for (int q = 0; q < rule.size(); ++q) {
                double t = 0.5 * (1.0 + rule.pts[q]);
                double x = ed.x0 + t * (ed.x1 - ed.x0);
                double z = ed.z0 + t * (ed.z1 - ed.z0);
                cplx resid = fn(x, z) - c[0] * b.val(0, q) - c[1] * b.val(1, q);
                for (int i = 0; i < nb; ++i) {
                    rhs[i] += rule.wts[q] * b.val(i + 2, q) * resid;
                    for (int j = 0; j < nb; ++j)
                        M(i, j) += rule.wts[q] * b.val(i + 2, q) * b.val(j + 2, q);
                }
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
            c.tail(nb) = ldlt.solve(rhs.real()).cast<cplx>() +
                         cplx(0, 1) * ldlt.solve(rhs.imag()).cast<cplx>();
        }
        return c;
    }

    /// Per-element map of the 8(p+1) local trace dofs to global indices
    /// (>= 0 free) or constrained values (index -1, value in `vals`).
    void element_trace_dofs(const Mesh& mesh, int e, std::vector<int>& idx,
                            std::vector<cplx>& vals) const {
        const Mesh::Elem& el = mesh.elems[e];
        int n_edge = p + 1;
        idx.assign(8 * n_edge, -1);
        vals.assign(8 * n_edge, cplx(0.0));
        for (int side = 0; side < 4; ++side) {
            int eid = el.edge[side];
            auto [va, vb] = endpoints(mesh, eid);
            int base = side * 2 * n_edge;
            // E trace: vertex dofs then bubbles
            int dv[2] = {vertex_dof[va], vertex_dof[vb]};
            cplx vv[2] = {vertex_val[va], vertex_val[vb]};
            for (int k = 0; k < 2; ++k) {
                if (dv[k] >= 0) idx[base + k] = dv[k];
                else vals[base + k] = vv[k];
            }
            for (int b = 0; b < n_bub; ++b) {
                if (ebub_start[eid] >= 0) idx[base + 2 + b] = ebub_start[eid] + b;
                else vals[base + 2 + b] = edge_E_bc[eid].size() ? edge_E_bc[eid][2 + b] : cplx(0.0);
            }
            for (int b = 0; b < n_edge; ++b) idx[base + n_edge + b] = h_start[eid] + b;
        }
    }
};

}  // namespace dpg

/// Assembles, statically condenses, and solves one linear Maxwell system on
/// the layered mesh. Throws numerical_breakdown / singular_system on failure.
inline FieldSolution solve_linear_maxwell(const MaxwellProblem& prob) {
    const Mesh& mesh = *prob.mesh;
    dpg::RefTabs rt(prob.p, prob.dp);
    dpg::TraceDofMap dofs(mesh, prob);
    const int n_elems = static_cast<int>(mesh.elems.size());
    const int n2 = rt.n2, n_edge = prob.p + 1;
    const int n_i = 3 * n2, n_b = 8 * n_edge;

    LayeredMatrix<cplx> A(dofs.block_sizes);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dofs.n_free);

    struct ElemStore {
        Eigen::LLT<Eigen::MatrixXcd> Sii;
        Eigen::MatrixXcd Sib;
        Eigen::VectorXcd fi;
    };
    std::vector<ElemStore> store(n_elems);
    std::vector<int> idx;
    std::vector<cplx> vals;

    for (int e = 0; e < n_elems; ++e) {
        dpg::ElementMatrices em = dpg::assemble_element(prob, rt, e);
        Eigen::LLT<Eigen::MatrixXcd> gllt(em.G);
        if (gllt.info() != Eigen::Success)
            throw numerical_breakdown("Gram factorization failed on element " + std::to_string(e));
        Eigen::MatrixXcd Bt = gllt.matrixL().solve(em.B);
        Eigen::VectorXcd lt = gllt.matrixL().solve(em.l);
        Eigen::MatrixXcd S = Bt.adjoint() * Bt;
        Eigen::VectorXcd f = Bt.adjoint() * lt;

        ElemStore& st = store[e];
        st.Sii.compute(S.topLeftCorner(n_i, n_i));
        if (st.Sii.info() != Eigen::Success)
            throw numerical_breakdown("interior condensation failed on element " +
                                      std::to_string(e));
        st.Sib = S.topRightCorner(n_i, n_b);
        st.fi = f.head(n_i);

        Eigen::MatrixXcd X = st.Sii.solve(st.Sib);  // Sii^{-1} Sib
        Eigen::MatrixXcd Shat = S.bottomRightCorner(n_b, n_b) - st.Sib.adjoint() * X;
        Eigen::VectorXcd fhat = f.tail(n_b) - st.Sib.adjoint() * st.Sii.solve(st.fi);

        dofs.element_trace_dofs(mesh, e, idx, vals);
        for (int a = 0; a < n_b; ++a) {
            if (idx[a] < 0) continue;
            rhs[idx[a]] += fhat[a];
            for (int b = 0; b < n_b; ++b) {
                if (idx[b] >= 0) A.add(idx[a], idx[b], Shat(a, b));
                else rhs[idx[a]] -= Shat(a, b) * vals[b];
            }
        }
    }

    LayeredFactorization<cplx> fact(A);
    Eigen::VectorXcd u = fact.solve_refined(A, rhs);

    // recover broken L^2 fields and resolve all edge traces
    FieldSolution sol;
    sol.p = prob.p;
    sol.E.resize(n_elems);
    sol.Hx.resize(n_elems);
    sol.Hz.resize(n_elems);
    for (int e = 0; e < n_elems; ++e) {
        dofs.element_trace_dofs(mesh, e, idx, vals);
        Eigen::VectorXcd ub(n_b);
        for (int a = 0; a < n_b; ++a) ub[a] = idx[a] >= 0 ? u[idx[a]] : vals[a];
        Eigen::VectorXcd ui = store[e].Sii.solve(store[e].fi - store[e].Sib * ub);
        sol.E[e] = ui.segment(0, n2);
        sol.Hx[e] = ui.segment(n2, n2);
        sol.Hz[e] = ui.segment(2 * n2, n2);
    }
    sol.edge_E.resize(mesh.edges.size());
    sol.edge_H.resize(mesh.edges.size());
    for (int eid = 0; eid < static_cast<int>(mesh.edges.size()); ++eid) {
        Eigen::VectorXcd ce(n_edge), ch(n_edge);
        auto [va, vb] = dpg::TraceDofMap::endpoints(mesh, eid);
        ce[0] = dofs.vertex_dof[va] >= 0 ? u[dofs.vertex_dof[va]] : dofs.vertex_val[va];
        ce[1] = dofs.vertex_dof[vb] >= 0 ? u[dofs.vertex_dof[vb]] : dofs.vertex_val[vb];
        for (int b = 0; b < dofs.n_bub; ++b)
            ce[2 + b] = dofs.ebub_start[eid] >= 0 ? u[dofs.ebub_start[eid] + b]
                                                  : dofs.edge_E_bc[eid][2 + b];
        for (int b = 0; b < n_edge; ++b) ch[b] = u[dofs.h_start[eid] + b];
        sol.edge_E[eid] = ce;
        sol.edge_H[eid] = ch;
    }
    return sol;
}

/// Cross-sectional power flux at a z-layer interface, computed from the
/// trace unknowns: P = -1/2 int Re(E conj(H_x)) dx, positive for a wave
/// launched in +z.
inline double power_flux(const Mesh& mesh, const FieldSolution& sol, int interface) {
    if (interface < 0 || interface > mesh.n_z)
        throw std::out_of_range("power_flux: invalid interface index");
    int p = sol.p;
    QuadratureRule rule = gauss_rule(p + 2);
    Basis bh1 = tabulate(BasisFamily::h1, p, rule);
    Basis bleg = tabulate(BasisFamily::l2, p, rule);
    double P = 0.0;
    for (int ix = 0; ix < mesh.n_x; ++ix) {
        int eid = mesh.transverse_edge(ix, interface);
        const Mesh::Edge& ed = mesh.edges[eid];
        double Je = 0.5 * (ed.x1 - ed.x0);
        for (int q = 0; q < rule.size(); ++q) {
            cplx E = 0.0, H = 0.0;
            for (int b = 0; b <= p; ++b) {
                E += sol.edge_E[eid][b] * bh1.val(b, q);
                H += sol.edge_H[eid][b] * bleg.val(b, q);
            }
            P += -0.5 * rule.wts[q] * Je * std::real(E * std::conj(H));
        }
    }
    return P;
}

struct ResidualReport {
    std::vector<double> per_element;
    double total = 0.0;
};

/// DPG residual in the adjoint graph norm: eta_K^2 = r* G^{-1} r with r the
/// enriched-test residual of the broken form.
inline ResidualReport residual(const MaxwellProblem& prob, const FieldSolution& sol) {
    const Mesh& mesh = *prob.mesh;
    dpg::RefTabs rt(prob.p, prob.dp);
    const int n2 = rt.n2, n_edge = prob.p + 1;
    ResidualReport rep;
    rep.per_element.resize(mesh.elems.size());
    std::vector<int> idx;
    std::vector<cplx> vals;
    for (int e = 0; e < static_cast<int>(mesh.elems.size()); ++e) {
        dpg::ElementMatrices em = dpg::assemble_element(prob, rt, e);
        Eigen::VectorXcd u(em.n_interior + em.n_trace);
        u.segment(0, n2) = sol.E[e];
        u.segment(n2, n2) = sol.Hx[e];
        u.segment(2 * n2, n2) = sol.Hz[e];
        const Mesh::Elem& el = mesh.elems[e];
        for (int side = 0; side < 4; ++side) {
            int eid = el.edge[side];
            int base = em.n_interior + side * 2 * n_edge;
            u.segment(base, n_edge) = sol.edge_E[eid];
            u.segment(base + n_edge, n_edge) = sol.edge_H[eid];
        }
        Eigen::VectorXcd r = em.l - em.B * u;
        Eigen::LLT<Eigen::MatrixXcd> gllt(em.G);
        Eigen::VectorXcd y = gllt.matrixL().solve(r);
        double eta2 = y.squaredNorm();
        rep.per_element[e] = std::sqrt(eta2);
        rep.total += eta2;
    }
    rep.total = std::sqrt(rep.total);
    return rep;
}

/// L^2 norm of the E component over the whole mesh (Legendre orthogonality).
inline double l2_norm_E(const Mesh& mesh, const FieldSolution& sol) {
    int p = sol.p;
    double acc = 0.0;
    for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
        const Mesh::Elem& el = mesh.elems[e];
        double hx = el.x1 - el.x0, hz = el.z1 - el.z0;
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i)
                acc += std::norm(sol.E[e][i + (p + 1) * j]) * (hx / (2.0 * i + 1.0)) *
                       (hz / (2.0 * j + 1.0));
    }
    return std::sqrt(acc);
}

inline double l2_diff_E(const Mesh& mesh, const FieldSolution& a, const FieldSolution& b) {
    int p = a.p;
    double acc = 0.0;
    for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
        const Mesh::Elem& el = mesh.elems[e];
        double hx = el.x1 - el.x0, hz = el.z1 - el.z0;
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i)
                acc += std::norm(a.E[e][i + (p + 1) * j] - b.E[e][i + (p + 1) * j]) *
                       (hx / (2.0 * i + 1.0)) * (hz / (2.0 * j + 1.0));
    }
    return std::sqrt(acc);
}

}  // namespace fiberamp

#endif
