#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fiberamp/gain.hpp"

using namespace fiberamp;
using Catch::Approx;

namespace {

PhysicalParams table_params() {
    SimulationConfig cfg;
    cfg.validate();
    return PhysicalParams::from_config(cfg);
}

/// Independent brute-force evaluation of the steady-state two-manifold
/// model, written from the rate equations with literal constants only.
struct BruteForce {
    static constexpr double hbar = 1.054571817e-34;
    static constexpr double c = 299792458.0;
    double N_excited(double I_s, double I_p) const {
        double w_s = 2.0 * M_PI * c / 1064e-9;
        double w_p = 2.0 * M_PI * c / 976e-9;
        double phi_s = I_s / (hbar * w_s), phi_p = I_p / (hbar * w_p);
        double num = phi_s * 6e-27 + phi_p * 1.429e-24;
        double den = 1.0 / 8e-4 + phi_s * (6e-27 + 3.58e-25) + phi_p * (1.429e-24 + 1.776e-24);
        return 6e25 * num / den;
    }
    double g(double sig_a, double sig_e, double I_s, double I_p) const {
        return -sig_a * 6e25 + (sig_a + sig_e) * N_excited(I_s, I_p);
    }
    double g_s(double I_s, double I_p) const { return g(6e-27, 3.58e-25, I_s, I_p); }
    double g_p(double I_s, double I_p) const { return g(1.429e-24, 1.776e-24, I_s, I_p); }
};

}  // namespace

TEST_CASE("gain-model oracle suite") {
    PhysicalParams phys = table_params();
    BruteForce bf;

    // frozen hand-derived values
    CHECK(excited_population(0.0, 1e10, phys) == Approx(2.654e25).epsilon(1e-3));
    CHECK(gain_coefficient(FieldId::signal, 0.0, 0.0, phys) == Approx(-0.36).epsilon(1e-3));
    CHECK(gain_coefficient(FieldId::pump, 0.0, 0.0, phys) == Approx(-85.74).epsilon(1e-3));
    CHECK(gain_coefficient(FieldId::pump, 0.0, 1e10, phys) == Approx(-0.68).epsilon(2e-2));
    CHECK(gain_coefficient(FieldId::signal, 0.0, 1e10, phys) == Approx(9.30).epsilon(2e-2));

    // cross-check against the independent brute-force model on a grid
    for (double I_s : {0.0, 1e8, 1e10, 5e11}) {
        for (double I_p : {0.0, 1e9, 1e10, 1e12}) {
            CHECK(excited_population(I_s, I_p, phys) ==
                  Approx(bf.N_excited(I_s, I_p)).epsilon(1e-10).margin(1e10));
            CHECK(gain_coefficient(FieldId::signal, I_s, I_p, phys) ==
                  Approx(bf.g_s(I_s, I_p)).epsilon(1e-10).margin(1e-12));
            CHECK(gain_coefficient(FieldId::pump, I_s, I_p, phys) ==
                  Approx(bf.g_p(I_s, I_p)).epsilon(1e-10).margin(1e-12));
        }
    }
}

TEST_CASE("population bounds and saturation") {
    PhysicalParams phys = table_params();
    double sat = phys.sigma_abs_p / (phys.sigma_abs_p + phys.sigma_ems_p);  // 0.4459
    CHECK(sat == Approx(0.44587).epsilon(1e-3));
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(0.0, 1e12);
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double I_s = dist(rng), I_p = dist(rng);
        double N = excited_population(I_s, I_p, phys);
        CHECK(N >= 0.0);
        CHECK(N < phys.N_total);
        // pump gain never crosses transparency from below
        CHECK(gain_coefficient(FieldId::pump, I_s, I_p, phys) < 0.0);
    }
    // monotone in I_p at dark signal, bounded by the saturation limit
    for (double I_p : {0.0, 1e8, 1e9, 1e10, 1e11, 1e12}) {
        double N = excited_population(0.0, I_p, phys);
        CHECK(N >= prev);
        CHECK(N <= sat * phys.N_total);
        prev = N;
    }
}

TEST_CASE("heat source non-negativity (photon balance)") {
    PhysicalParams phys = table_params();
    CHECK(heat_source(0.0, 0.0, phys) == 0.0);
    std::mt19937 rng(999);
    std::uniform_real_distribution<double> dist(0.0, 1e12);
    for (int i = 0; i < 2000; ++i) {
        double I_s = dist(rng), I_p = dist(rng);
        CHECK(heat_source(I_s, I_p, phys) >= -1e-9);
    }
    // direct formula spot check with frozen dark pump gain
    GainSample s = gain_sample(0.0, 1e10, phys);
    CHECK(s.Q == Approx(-s.g_p * 1e10).epsilon(1e-12));
    CHECK(s.Q > 0.0);
}

TEST_CASE("irradiance definitions") {
    PhysicalParams phys = table_params();
    CHECK(irradiance(0.0, 1.45) == 0.0);
    CHECK(irradiance_hat(1.0, 1.4512) == Approx(0.7256).epsilon(1e-12));
    // doubling the field quadruples the irradiance
    CHECK(irradiance(2e6, 1.45) == Approx(4.0 * irradiance(1e6, 1.45)).epsilon(1e-12));
    // dimensional consistency: I(E_hat E_0, n) = I_0 I_hat(E_hat, n)
    SimulationConfig cfg;
    cfg.validate();
    Scales sc = Scales::from_config(cfg);
    std::complex<double> Eh(0.3, -0.7);
    CHECK(irradiance(Eh * sc.E_0, 1.4512) ==
          Approx(sc.I_0 * irradiance_hat(Eh, 1.4512)).epsilon(1e-12));
    CHECK_THROWS_AS(irradiance(1.0, 0.5), invalid_parameter);
    // Poynting magnitude of a plane wave matches the plane-wave formula:
    // E = 1, H_x = -n E (forward wave), H_z = 0 gives I = n/2
    CHECK(irradiance_poynting(1.0, -1.45, 0.0) == Approx(0.5 * 1.45).epsilon(1e-12));
    (void)phys;
}
