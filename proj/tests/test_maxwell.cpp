#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>

#include "fiberamp/maxwell.hpp"
#include "fiberamp/modes.hpp"

using namespace fiberamp;
using Catch::Approx;

namespace {

Mesh make_mesh(int nw, int epw, int nx, int pml_w,
               TransverseGrading grading = TransverseGrading::uniform) {
    SimulationConfig cfg;
    cfg.num_wavelengths = nw;
    cfg.elems_per_wavelength = epw;
    cfg.n_transverse_elems = nx;
    cfg.pml_wavelengths = pml_w;
    cfg.transverse_grading = grading;
    cfg.validate();
    PhysicalParams phys = PhysicalParams::from_config(cfg);
    Scales scales = Scales::from_config(cfg);
    NondimParams nd = nondimensionalize(phys, scales, cfg);
    return build_layered_mesh(cfg, nd, scales, phys);
}

struct Exact {
    std::function<cplx(double, double)> E, Hx, Hz;
    std::function<cplx(double, double)> dE_dx, dE_dz, dHx_dz, dHz_dx;
};

/// Volume loads of the un-stretched first-order system for given exact
/// fields: f1 = dz Hx - dx Hz - cE E, f2 = -dz E + iw Hx, f3 = dx E + iw Hz.
void attach_manufactured(MaxwellProblem& prob, const Exact& ex, double n, double g) {
    double w = prob.omega_hat, gf = prob.gain_factor;
    cplx cE = cplx(0.0, w * n * n) - n * gf * g;
    prob.f1 = [ex, cE](double x, double z) {
        return ex.dHx_dz(x, z) - ex.dHz_dx(x, z) - cE * ex.E(x, z);
    };
    prob.f2 = [ex, w](double x, double z) {
        return -ex.dE_dz(x, z) + cplx(0, w) * ex.Hx(x, z);
    };
    prob.f3 = [ex, w](double x, double z) {
        return ex.dE_dx(x, z) + cplx(0, w) * ex.Hz(x, z);
    };
    prob.dirichlet_E = ex.E;
}

/// Relative L2 errors of all three fields against an exact solution,
/// sampled with Gauss quadrature.
double field_error(const Mesh& mesh, const FieldSolution& sol, const Exact& ex) {
    QuadratureRule rule = gauss_rule(sol.p + 3);
    double err2 = 0.0, nrm2 = 0.0;
    for (int e = 0; e < static_cast<int>(mesh.elems.size()); ++e) {
        const Mesh::Elem& el = mesh.elems[e];
        double J = 0.25 * (el.x1 - el.x0) * (el.z1 - el.z0);
        for (int qz = 0; qz < rule.size(); ++qz)
            for (int qx = 0; qx < rule.size(); ++qx) {
                double x = 0.5 * (el.x0 + el.x1) + 0.5 * (el.x1 - el.x0) * rule.pts[qx];
                double z = 0.5 * (el.z0 + el.z1) + 0.5 * (el.z1 - el.z0) * rule.pts[qz];
                double w = rule.wts[qx] * rule.wts[qz] * J;
                err2 += w * (std::norm(sol.eval_E(mesh, e, x, z) - ex.E(x, z)) +
                             std::norm(sol.eval_Hx(mesh, e, x, z) - ex.Hx(x, z)) +
                             std::norm(sol.eval_Hz(mesh, e, x, z) - ex.Hz(x, z)));
                nrm2 += w * (std::norm(ex.E(x, z)) + std::norm(ex.Hx(x, z)) +
                             std::norm(ex.Hz(x, z)));
            }
    }
    return std::sqrt(err2 / nrm2);
}

/// L2 norm of E restricted to one z-column of elements.
double column_norm_E(const Mesh& mesh, const FieldSolution& sol, int iz) {
    double acc = 0.0;
    int p = sol.p;
    for (int ix = 0; ix < mesh.n_x; ++ix) {
        int e = mesh.elem_id(ix, iz);
        const Mesh::Elem& el = mesh.elems[e];
        double hx = el.x1 - el.x0, hz = el.z1 - el.z0;
        for (int j = 0; j <= p; ++j)
            for (int i = 0; i <= p; ++i)
                acc += std::norm(sol.E[e][i + (p + 1) * j]) * (hx / (2 * i + 1.0)) *
                       (hz / (2 * j + 1.0));
    }
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("PML stretch profile") {
    PmlSpec pml{1.596, 0.3192, 40.0, 59.0525};
    CHECK(pml_stretch(0.5, pml) == cplx(1.0, 0.0));
    CHECK(pml_stretch(1.596, pml) == cplx(1.0, 0.0));
    cplx s_end = pml_stretch(1.596 + 0.3192, pml);
    CHECK(s_end.real() == Approx(1.0));
    CHECK(s_end.imag() == Approx(-40.0 / 59.0525).epsilon(1e-10));  // -0.6774
    cplx s_mid = pml_stretch(1.596 + 0.5 * 0.3192, pml);
    CHECK(s_mid.imag() == Approx(-40.0 * 0.125 / 59.0525).epsilon(1e-10));
    // disabled PML
    CHECK(pml_stretch(10.0, PmlSpec{0.0, 0.0, 40.0, 1.0}) == cplx(1.0, 0.0));
}

TEST_CASE("manufactured polynomial solution is recovered exactly") {
    Mesh mesh = make_mesh(1, 1, 4, 1);
    MaxwellProblem prob;
    prob.mesh = &mesh;
    prob.p = 3;
    prob.dp = 2;
    prob.omega_hat = 2.0;
    prob.gain_factor = 0.5;
    double n = 1.45, g = 0.3;
    prob.n_of = [n](int, double, double) { return n; };
    prob.g_of = [g](int, double, double) { return g; };
    prob.pml = PmlSpec{};  // disabled

    double Lx = mesh.r_clad_hat, Lz = mesh.z_breaks.back();
    auto u = [Lx](double x) { return x / Lx; };
    auto w = [Lz](double z) { return z / Lz; };
    Exact ex;
    ex.E = [=](double x, double z) {
        return cplx(1.0, 0.5) + 0.3 * u(x) + cplx(0, 0.2) * w(z) + 0.1 * u(x) * w(z) +
               0.05 * u(x) * u(x);
    };
    ex.dE_dx = [=](double x, double z) {
        return (0.3 + 0.1 * w(z) + 0.1 * u(x)) / Lx;
    };
    ex.dE_dz = [=](double x, double) { return (cplx(0, 0.2) + 0.1 * u(x)) / Lz; };
    ex.Hx = [=](double x, double z) {
        return cplx(0.2, 0.0) - cplx(0, 0.4) * u(x) + 0.1 * w(z) * w(z);
    };
    ex.dHx_dz = [=](double, double z) { return cplx(0.2 * w(z) / Lz, 0.0); };
    ex.Hz = [=](double x, double z) { return cplx(0, 0.3) + 0.2 * u(x) - cplx(0, 0.1) * w(z); };
    ex.dHz_dx = [=](double, double) { return cplx(0.2 / Lx, 0.0); };
    attach_manufactured(prob, ex, n, g);

    FieldSolution sol = solve_linear_maxwell(prob);
    CHECK(field_error(mesh, sol, ex) < 1e-10);

    // trace unknowns reproduce the exact values too
    QuadratureRule rule = gauss_rule(prob.p + 2);
    Basis bh1 = tabulate(BasisFamily::h1, prob.p, rule);
    for (int eid = 0; eid < static_cast<int>(mesh.edges.size()); ++eid) {
        const Mesh::Edge& ed = mesh.edges[eid];
        for (int q = 0; q < rule.size(); ++q) {
            double t = 0.5 * (1.0 + rule.pts[q]);
            double x = ed.x0 + t * (ed.x1 - ed.x0);
            double z = ed.z0 + t * (ed.z1 - ed.z0);
            cplx Ev = 0.0;
            for (int b = 0; b <= prob.p; ++b) Ev += sol.edge_E[eid][b] * bh1.val(b, q);
            CHECK(std::abs(Ev - ex.E(x, z)) < 1e-9);
        }
    }

    // the DPG residual of the recovered solution is at round-off level
    ResidualReport rep = residual(prob, sol);
    CHECK(rep.total < 1e-9);
}

TEST_CASE("smooth manufactured wave is approximated accurately") {
    Mesh mesh = make_mesh(2, 2, 8, 1);
    MaxwellProblem prob;
    prob.mesh = &mesh;
    prob.p = 4;
    prob.dp = 2;
    prob.omega_hat = 3.0;
    prob.gain_factor = 0.0;
    double n = 1.45;
    prob.n_of = [n](int, double, double) { return n; };
    prob.pml = PmlSpec{};

    double kx = 0.2, kz = 4.0;
    Exact ex;
    ex.E = [=](double x, double z) {
        return std::cos(kx * x) * std::exp(cplx(0, -kz * z));
    };
    ex.dE_dx = [=](double x, double z) {
        return -kx * std::sin(kx * x) * std::exp(cplx(0, -kz * z));
    };
    ex.dE_dz = [=](double x, double z) { return cplx(0, -kz) * ex.E(x, z); };
    ex.Hx = [=](double x, double z) { return 0.5 * ex.E(x, z); };
    ex.dHx_dz = [=](double x, double z) { return cplx(0, -kz) * 0.5 * ex.E(x, z); };
    ex.Hz = [=](double x, double z) {
        return cplx(0, 0.3) * std::sin(kx * x) * std::exp(cplx(0, -kz * z));
    };
    ex.dHz_dx = [=](double x, double z) {
        return cplx(0, 0.3) * kx * std::cos(kx * x) * std::exp(cplx(0, -kz * z));
    };
    attach_manufactured(prob, ex, n, 0.0);

    FieldSolution sol = solve_linear_maxwell(prob);
    CHECK(field_error(mesh, sol, ex) < 1e-4);
}

TEST_CASE("zero-gain mode launch: flux conservation and PML absorption") {
    Mesh mesh = make_mesh(3, 2, 8, 3, TransverseGrading::geometric);
    double omega_hat = 59.0525;
    ModeSolution mode = solve_fundamental_mode(
        omega_hat, SlabGeometry{mesh.r_core_hat, 1.4512, 1.45}, 1e-12, 1.0);

    MaxwellProblem prob;
    prob.mesh = &mesh;
    prob.p = 4;
    prob.dp = 2;
    prob.omega_hat = omega_hat;
    prob.gain_factor = 0.0;
    prob.n_of = [&mesh](int e, double, double) {
        return mesh.elems[e].core ? 1.4512 : 1.45;
    };
    prob.pml = PmlSpec{mesh.L_tilde, mesh.pml_length, 40.0, omega_hat};
    prob.inlet_trace = mode_trace(mode, mesh, prob.p);

    FieldSolution sol = solve_linear_maxwell(prob);

    // launched power is carried through the interior
    double P0 = power_flux(mesh, sol, 0);
    CHECK(P0 == Approx(1.0).epsilon(0.02));
    double pmin = 1e300, pmax = -1e300;
    for (int j = 0; j <= mesh.n_z_interior; ++j) {
        double P = power_flux(mesh, sol, j);
        pmin = std::min(pmin, P);
        pmax = std::max(pmax, P);
    }
    CHECK((pmax - pmin) / P0 < 0.02);

    // the PML swallows the wave: almost nothing reaches the outlet
    CHECK(power_flux(mesh, sol, mesh.n_z) < 0.01 * P0);
    double first = column_norm_E(mesh, sol, 0);
    double last = column_norm_E(mesh, sol, mesh.n_z - 1);
    CHECK(last < 0.1 * first);
}

TEST_CASE("power flux sign convention") {
    // forward slab mode has H_x = -(beta/omega) E, so P = -1/2 Re(E Hx*) > 0
    Mesh mesh = make_mesh(1, 1, 4, 1);
    FieldSolution sol;
    sol.p = 1;
    sol.edge_E.assign(mesh.edges.size(), Eigen::VectorXcd::Zero(2));
    sol.edge_H.assign(mesh.edges.size(), Eigen::VectorXcd::Zero(2));
    for (int ix = 0; ix < mesh.n_x; ++ix) {
        int eid = mesh.transverse_edge(ix, 0);
        sol.edge_E[eid][0] = 1.0;   // vertex values: E = 1 on the edge
        sol.edge_E[eid][1] = 1.0;
        sol.edge_H[eid][0] = -1.45;  // P_0 Legendre coefficient: Hx = -1.45
    }
    double width = mesh.x_breaks.back() - mesh.x_breaks.front();
    CHECK(power_flux(mesh, sol, 0) == Approx(0.5 * 1.45 * width).epsilon(1e-12));
    CHECK_THROWS_AS(power_flux(mesh, sol, mesh.n_z + 1), std::out_of_range);
}
