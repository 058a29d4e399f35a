#ifndef FIBERAMP_GAIN_HPP
#define FIBERAMP_GAIN_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

#include "fiberamp/params.hpp"

namespace fiberamp {

/// Pointwise state of the two-manifold Yb gain model.
struct GainSample {
    double N_excited;  // [ion/m^3]
    double g_s, g_p;   // [1/m]
    double Q;          // [W/m^3]
};

/// Steady-state excited-state concentration for given signal/pump
/// irradiances [W/m^2]. Result lies in [0, N_total).
inline double excited_population(double I_s, double I_p, const PhysicalParams& phys) {
    if (I_s < 0.0 || I_p < 0.0)
        throw invalid_parameter("excited_population: irradiance must be non-negative");
    double phi_s = I_s / (constants::hbar * phys.omega(FieldId::signal));
    double phi_p = I_p / (constants::hbar * phys.omega(FieldId::pump));
    double num = phi_s * phys.sigma_abs_s + phi_p * phys.sigma_abs_p;
    double den = 1.0 / phys.tau +
                 phi_s * (phys.sigma_abs_s + phys.sigma_ems_s) +
                 phi_p * (phys.sigma_abs_p + phys.sigma_ems_p);
    return phys.N_total * num / den;
}

/// Gain [1/m] of field k at the given irradiances. Valid inside the core;
/// callers are responsible for zeroing it outside.
inline double gain_coefficient(FieldId k, double I_s, double I_p, const PhysicalParams& phys) {
    double N_exc = excited_population(I_s, I_p, phys);
    return -phys.sigma_abs(k) * phys.N_total +
           (phys.sigma_abs(k) + phys.sigma_ems(k)) * N_exc;
}

/// Plane-wave irradiance I = (1/2) n c eps_0 |E|^2 [W/m^2].
inline double irradiance(std::complex<double> E, double n) {
    if (n < 1.0) throw invalid_parameter("irradiance: refractive index must be >= 1");
    return 0.5 * n * constants::c * constants::eps_0 * std::norm(E);
}

/// Non-dimensional irradiance I^ = (1/2) n |E^|^2 for a non-dimensional field
/// amplitude (the dimensional scales satisfy I_0 = E_0 H_0 = c eps_0 E_0^2).
inline double irradiance_hat(std::complex<double> E_hat, double n) {
    if (n < 1.0) throw invalid_parameter("irradiance_hat: refractive index must be >= 1");
    return 0.5 * n * std::norm(E_hat);
}

/// Magnitude of the time-averaged Poynting vector, |Re(E x H*)|/2, as an
/// alternative irradiance definition. 2D TE fields: E scalar, H = (H_x, H_z).
inline double irradiance_poynting(std::complex<double> E, std::complex<double> H_x,
                                  std::complex<double> H_z) {
    double Sx = 0.5 * std::real(E * std::conj(H_z));
    double Sz = -0.5 * std::real(E * std::conj(H_x));
    return std::hypot(Sx, Sz);
}

/// Quantum-defect heat deposition Q = -(g_p I_p + g_s I_s) [W/m^3], with the
/// physical (unscaled) gain. Non-negative for steady-state populations.
inline double heat_source(double I_s, double I_p, const PhysicalParams& phys) {
    double g_s = gain_coefficient(FieldId::signal, I_s, I_p, phys);
    double g_p = gain_coefficient(FieldId::pump, I_s, I_p, phys);
    return -(g_p * I_p + g_s * I_s);
}

inline GainSample gain_sample(double I_s, double I_p, const PhysicalParams& phys) {
    GainSample s;
    s.N_excited = excited_population(I_s, I_p, phys);
    s.g_s = -phys.sigma_abs_s * phys.N_total +
            (phys.sigma_abs_s + phys.sigma_ems_s) * s.N_excited;
    s.g_p = -phys.sigma_abs_p * phys.N_total +
            (phys.sigma_abs_p + phys.sigma_ems_p) * s.N_excited;
    s.Q = -(s.g_p * I_p + s.g_s * I_s);
    return s;
}

}  // namespace fiberamp

#endif
