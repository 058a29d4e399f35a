#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fiberamp/heat.hpp"

using namespace fiberamp;
using Catch::Approx;

namespace {

struct Setup {
    SimulationConfig cfg;
    PhysicalParams phys;
    Scales scales;
    NondimParams nd;
    Mesh mesh;
    explicit Setup(SimulationConfig c)
        : cfg(c),
          phys(PhysicalParams::from_config(cfg)),
          scales(Scales::from_config(cfg)),
          nd(nondimensionalize(phys, scales, cfg)),
          mesh(build_layered_mesh(cfg, nd, scales, phys)) {}
};

SimulationConfig small_cfg() {
    SimulationConfig cfg;
    cfg.num_wavelengths = 2;
    cfg.elems_per_wavelength = 2;
    cfg.n_transverse_elems = 8;
    cfg.pml_wavelengths = 1;
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("zero heat source is a fixed point") {
    Setup s(small_cfg());
    HeatSolver solver(s.mesh, 3, 2, s.nd.alpha_0, s.nd.alpha_z, 0.1, s.nd.Q_0);
    HeatState state = solver.initial_state();
    auto zero = [](int, double, double) { return 0.0; };
    for (int n = 0; n < 3; ++n) {
        state = solver.step(state, zero);
        CHECK(heat_l2_norm(s.mesh, state) < 1e-12);
    }
    CHECK(solver.boundary_heat_flux(state) == Approx(0.0).margin(1e-12));
    CHECK(state.time_index == 3);
}

TEST_CASE("temperature projection reproduces smooth fields") {
    Setup s(small_cfg());
    auto fn = [](double x, double z) { return 1.0 + 0.1 * x + 0.05 * x * x + 0.3 * z * x; };
    HeatState st = project_temperature(s.mesh, 3, fn);
    for (int e = 0; e < s.mesh.n_x * s.mesh.n_z_interior; ++e) {
        const Mesh::Elem& el = s.mesh.elems[e];
        for (double a : {-0.9, 0.0, 0.6})
            for (double b : {-0.7, 0.2, 1.0}) {
                double x = 0.5 * (el.x0 + el.x1) + 0.5 * (el.x1 - el.x0) * a;
                double z = 0.5 * (el.z0 + el.z1) + 0.5 * (el.z1 - el.z0) * b;
                CHECK(st.eval(s.mesh, e, x, z) == Approx(fn(x, z)).margin(1e-10));
            }
    }
}

TEST_CASE("anisotropic decay mode converges at first order in dt") {
    SimulationConfig cfg = small_cfg();
    cfg.alpha_z_override = 0.2;  // make the scaled z-diffusion visible
    Setup s(cfg);
    const Mesh& mesh = s.mesh;
    double W = 2.0 * mesh.r_clad_hat, L = mesh.L_tilde;
    double kx = M_PI / W, kz = M_PI / L;
    double lambda = s.nd.alpha_0 * (kx * kx + s.nd.alpha_z * s.nd.alpha_z * kz * kz);
    auto u0 = [&](double x, double z) {
        return std::sin(kx * (x + mesh.r_clad_hat)) * std::sin(kz * z);
    };
    // keep lambda * t_final ~ O(1): for much larger values the mode decays to
    // roundoff and the measurement picks up the geometric decay of the
    // integrator instead of its truncation error
    double t_final = 1.6 / lambda;
    double exact = std::exp(-lambda * t_final);

    // probe away from symmetry lines
    double xp = 0.3 * mesh.r_clad_hat, zp = 0.37 * L;
    double u0p = u0(xp, zp);

    std::vector<double> errs;
    for (double dt : {t_final / 2, t_final / 4, t_final / 8}) {
        HeatSolver solver(mesh, 4, 2, s.nd.alpha_0, s.nd.alpha_z, dt, s.nd.Q_0,
                          HeatZBoundary::dirichlet);
        HeatState state = project_temperature(mesh, 4, u0);
        int n_steps = static_cast<int>(std::llround(t_final / dt));
        auto zero = [](int, double, double) { return 0.0; };
        for (int n = 0; n < n_steps; ++n) state = solver.step(state, zero);
        double got = state.eval(mesh, xp, zp) / u0p;
        errs.push_back(std::abs(got - exact));
    }
    double rate1 = std::log2(errs[0] / errs[1]);
    double rate2 = std::log2(errs[1] / errs[2]);
    CHECK(rate1 == Approx(1.0).margin(0.15));
    CHECK(rate2 == Approx(1.0).margin(0.15));
}

TEST_CASE("steady core heating balances boundary flux and matches the 1D parabola") {
    SimulationConfig cfg = small_cfg();
    cfg.heat_z_bc = HeatZBoundary::insulated;
    Setup s(cfg);
    const Mesh& mesh = s.mesh;
    HeatSolver solver(mesh, 3, 2, s.nd.alpha_0, s.nd.alpha_z, 2.0, s.nd.Q_0,
                      HeatZBoundary::insulated);
    auto Q = [&mesh](int e, double, double) { return mesh.elems[e].core ? 1.0 : 0.0; };
    HeatState state = solver.initial_state();
    for (int n = 0; n < 60; ++n) state = solver.step(state, Q);

    double vol = solver.volumetric_heat(Q);
    double bnd = solver.boundary_heat_flux(state);
    CHECK(vol > 0.0);
    CHECK(bnd == Approx(vol).epsilon(0.01));

    // analytic 1D two-region steady profile (uniform in z by symmetry)
    double a = mesh.r_core_hat, b = mesh.r_clad_hat;
    double S = s.nd.Q_0 / s.nd.alpha_0;
    double peak = S * (0.5 * a * a + a * (b - a));
    double zc = 0.5 * mesh.L_tilde;
    CHECK(state.eval(mesh, 0.0, zc) == Approx(peak).epsilon(0.01));
    CHECK(state.eval(mesh, a, zc) == Approx(S * a * (b - a)).epsilon(0.01));
    // symmetric, non-negative
    CHECK(state.eval(mesh, 4.0, zc) == Approx(state.eval(mesh, -4.0, zc)).epsilon(1e-6));
    for (double x = -b + 0.1; x < b; x += 1.7)
        CHECK(state.eval(mesh, x, zc) > -1e-8);
}

TEST_CASE("dirichlet z boundaries clamp the ends") {
    SimulationConfig cfg = small_cfg();
    Setup s(cfg);
    HeatSolver solver(s.mesh, 3, 2, s.nd.alpha_0, s.nd.alpha_z, 1.0, s.nd.Q_0,
                      HeatZBoundary::dirichlet);
    auto Q = [&](int e, double, double) { return s.mesh.elems[e].core ? 1.0 : 0.0; };
    HeatState state = solver.initial_state();
    for (int n = 0; n < 10; ++n) state = solver.step(state, Q);
    // temperature at the z-ends is pinned to ambient
    CHECK(std::abs(state.eval(s.mesh, 0.0, 0.0)) < 1e-10);
    CHECK(std::abs(state.eval(s.mesh, 0.0, s.mesh.L_tilde)) < 1e-10);
    CHECK(state.eval(s.mesh, 0.0, 0.5 * s.mesh.L_tilde) > 0.0);
}

TEST_CASE("solver rejects invalid orders") {
    Setup s(small_cfg());
    CHECK_THROWS_AS(HeatSolver(s.mesh, 1, 2, s.nd.alpha_0, s.nd.alpha_z, 0.1, s.nd.Q_0),
                    invalid_parameter);
}
