#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fiberamp/modes.hpp"

using namespace fiberamp;
using Catch::Approx;

namespace {
constexpr double kOmegaS = 59.05249;  // 2 pi l_0 / lambda_s at table values
const SlabGeometry kGeom{1.27, 1.4512, 1.45};
}  // namespace

TEST_CASE("fundamental slab mode satisfies its dispersion relation") {
    ModeSolution m = solve_fundamental_mode(kOmegaS, kGeom);
    double R2 = kOmegaS * kOmegaS * (kGeom.n_core * kGeom.n_core - kGeom.n_clad * kGeom.n_clad);
    CHECK(m.kappa_core * std::tan(m.kappa_core * m.a) ==
          Approx(m.gamma_clad).epsilon(1e-8));
    CHECK(m.kappa_core * m.kappa_core + m.gamma_clad * m.gamma_clad ==
          Approx(R2).epsilon(1e-10));
    CHECK(m.beta * m.beta + m.kappa_core * m.kappa_core ==
          Approx(kGeom.n_core * kGeom.n_core * kOmegaS * kOmegaS).epsilon(1e-10));
    CHECK(m.n_eff > kGeom.n_clad);
    CHECK(m.n_eff < kGeom.n_core);
    CHECK(m.kappa_core * m.a < 0.5 * M_PI);  // first even branch
}

TEST_CASE("mode profile is continuous, even, and normalized") {
    ModeSolution m = solve_fundamental_mode(kOmegaS, kGeom, 1e-12, 2.5);
    CHECK(m.profile(m.a - 1e-12) == Approx(m.profile(m.a + 1e-12)).epsilon(1e-8));
    CHECK(m.profile(0.7) == Approx(m.profile(-0.7)).epsilon(1e-14));
    CHECK(m.power() == Approx(2.5).epsilon(1e-10));
    CHECK(m.profile(0.0) == m.amplitude);
    // closed-form profile integral vs numerical quadrature over a wide window
    double num = 0.0, L = 12.7;
    int N = 400000;
    for (int i = 0; i < N; ++i) {
        double x = -L + 2 * L * (i + 0.5) / N;
        double v = m.profile(x);
        num += v * v * (2 * L / N);
    }
    CHECK(num == Approx(m.profile_sq_integral()).epsilon(1e-6));
}

TEST_CASE("zero launch power gives a dark mode") {
    ModeSolution m = solve_fundamental_mode(kOmegaS, kGeom, 1e-12, 0.0);
    CHECK(m.amplitude == 0.0);
    CHECK(m.power() == 0.0);
}

TEST_CASE("mode solver input validation") {
    CHECK_THROWS_AS(solve_fundamental_mode(kOmegaS, SlabGeometry{1.27, 1.45, 1.4512}),
                    invalid_parameter);
    CHECK_THROWS_AS(solve_fundamental_mode(kOmegaS, kGeom, -1.0), invalid_parameter);
}

TEST_CASE("interface projection reproduces the profile") {
    SimulationConfig cfg;
    cfg.validate();
    PhysicalParams phys = PhysicalParams::from_config(cfg);
    Scales scales = Scales::from_config(cfg);
    NondimParams nd = nondimensionalize(phys, scales, cfg);
    Mesh mesh = build_layered_mesh(cfg, nd, scales, phys);

    ModeSolution m = solve_fundamental_mode(nd.omega_hat_s,
                                            SlabGeometry{mesh.r_core_hat, phys.n_core,
                                                         phys.n_clad},
                                            1e-12, nd.P_s_in_hat);
    int p = 5;
    auto traces = mode_trace(m, mesh, p);
    REQUIRE(static_cast<int>(traces.size()) == mesh.n_x);

    QuadratureRule rule = gauss_rule(p + 4);
    Basis b = tabulate(BasisFamily::h1, p, rule);
    double err2 = 0.0, nrm2 = 0.0;
    for (int ix = 0; ix < mesh.n_x; ++ix) {
        double x0 = mesh.x_breaks[ix], x1 = mesh.x_breaks[ix + 1];
        // endpoints interpolated exactly
        CHECK(traces[ix][0] == Approx(m.profile(x0)).margin(1e-12));
        CHECK(traces[ix][1] == Approx(m.profile(x1)).margin(1e-12));
        for (int q = 0; q < rule.size(); ++q) {
            double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * rule.pts[q];
            double v = 0.0;
            for (int i = 0; i <= p; ++i) v += traces[ix][i] * b.val(i, q);
            double w = rule.wts[q] * 0.5 * (x1 - x0);
            err2 += w * (v - m.profile(x)) * (v - m.profile(x));
            nrm2 += w * m.profile(x) * m.profile(x);
        }
    }
    // the uniform default mesh leaves wide cladding elements, so the bubble
    // fit of the exponential tail dominates the error budget
    CHECK(std::sqrt(err2 / nrm2) < 5e-2);
}
