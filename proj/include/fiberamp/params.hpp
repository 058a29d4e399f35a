#ifndef FIBERAMP_PARAMS_HPP
#define FIBERAMP_PARAMS_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fiberamp/config.hpp"

namespace fiberamp {

class invalid_parameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace constants {
inline constexpr double c = 299792458.0;          // [m/s]
inline constexpr double eps_0 = 8.8541878128e-12; // [F/m]
inline constexpr double mu_0 = 1.25663706212e-6;  // [H/m]
inline constexpr double hbar = 1.054571817e-34;   // [J s]
}  // namespace constants

enum class FieldId { signal, pump };

/// Dimensional fiber and material parameters (SI units throughout).
struct PhysicalParams {
    double sigma_abs_s, sigma_ems_s;  // [m^2/ion]
    double sigma_abs_p, sigma_ems_p;  // [m^2/ion]
    double N_total;                   // [ion/m^3]
    double tau;                       // [s]
    double r_core, r_clad;            // [m]
    double n_core, n_clad;
    double lambda_s, lambda_p;        // [m]
    double C_p;                       // [W s/(kg K)]
    double rho_0;                     // [kg/m^3]
    double kappa;                     // [W/(m K)]
    double dn_dT;                     // [1/K]
    double L_real;                    // [m]
    double P_s_in, P_p_in;            // [W]

    double omega(FieldId k) const {
        return 2.0 * std::numbers::pi * constants::c /
               (k == FieldId::signal ? lambda_s : lambda_p);
    }
    double sigma_abs(FieldId k) const { return k == FieldId::signal ? sigma_abs_s : sigma_abs_p; }
    double sigma_ems(FieldId k) const { return k == FieldId::signal ? sigma_ems_s : sigma_ems_p; }

    static PhysicalParams from_config(const SimulationConfig& cfg) {
        PhysicalParams p;
        p.sigma_abs_s = cfg.sigma_abs_signal;
        p.sigma_ems_s = cfg.sigma_ems_signal;
        p.sigma_abs_p = cfg.sigma_abs_pump;
        p.sigma_ems_p = cfg.sigma_ems_pump;
        p.N_total = cfg.dopant_concentration;
        p.tau = cfg.upper_level_lifetime_s;
        p.r_core = cfg.r_core_um * 1e-6;
        p.r_clad = cfg.r_clad_um * 1e-6;
        p.n_core = cfg.n_core;
        p.n_clad = cfg.n_clad;
        p.lambda_s = cfg.lambda_signal_nm * 1e-9;
        p.lambda_p = cfg.lambda_pump_nm * 1e-9;
        p.C_p = cfg.heat_capacity;
        p.rho_0 = cfg.density;
        p.kappa = cfg.thermal_conductivity;
        p.dn_dT = cfg.dn_dT;
        p.L_real = cfg.fiber_length_m;
        p.P_s_in = cfg.launch_power_signal_W;
        p.P_p_in = cfg.launch_power_pump_W;
        p.validate();
        return p;
    }

    void validate() const {
        auto pos = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw invalid_parameter(std::string(name) + " must be positive and finite");
        };
        pos(sigma_abs_s, "sigma_abs_s"); pos(sigma_ems_s, "sigma_ems_s");
        pos(sigma_abs_p, "sigma_abs_p"); pos(sigma_ems_p, "sigma_ems_p");
        pos(N_total, "N_total"); pos(tau, "tau");
        pos(r_core, "r_core"); pos(r_clad, "r_clad");
        pos(lambda_s, "lambda_s"); pos(lambda_p, "lambda_p");
        pos(L_real, "L_real");
        if (P_s_in < 0.0 || P_p_in < 0.0)
            throw invalid_parameter("launch powers must be non-negative");
        if (!(n_clad > 1.0) || !(n_core > n_clad))
            throw invalid_parameter("require n_core > n_clad > 1");
        if (!(lambda_p < lambda_s))
            throw invalid_parameter("require lambda_p < lambda_s");
    }
};

/// Dimensional scales used for non-dimensionalization. The derived fields
/// satisfy omega_0 = c/l_0, H_0 = eps_0 c E_0, I_0 = E_0 H_0, P_0 = I_0 l_0^2,
/// g_0 = sigma_0 nu_0.
struct Scales {
    double l_0;      // [m]
    double I_0;      // [W/m^2]
    double sigma_0;  // [m^2/ion]
    double nu_0;     // [ion/m^3]
    double T_0;      // [K]
    double t_0;      // [s]
    // derived
    double omega_0;  // [rad/s]
    double E_0;      // [V/m]
    double H_0;      // [A/m]
    double P_0;      // [W]
    double g_0;      // [1/m]

    static Scales from_config(const SimulationConfig& cfg) {
        Scales s;
        s.l_0 = cfg.l_0_m;
        s.I_0 = cfg.I_0;
        s.sigma_0 = cfg.sigma_0;
        s.nu_0 = cfg.nu_0;
        s.T_0 = cfg.T_0;
        s.t_0 = cfg.t_0_s;
        s.omega_0 = constants::c / s.l_0;
        s.E_0 = std::sqrt(s.I_0 / (constants::eps_0 * constants::c));
        s.H_0 = constants::eps_0 * constants::c * s.E_0;
        s.P_0 = s.I_0 * s.l_0 * s.l_0;
        s.g_0 = s.sigma_0 * s.nu_0;
        return s;
    }
};

/// Non-dimensional constants of the scaled Maxwell and heat systems.
struct NondimParams {
    double omega_hat_s, omega_hat_p;  // 2 pi l_0 / lambda_k
    double l0g0;                      // l_0 g_0
    double gain_scale;                // g~_a
    double alpha_z;                   // L~/L in (0, 1]
    double alpha_0;                   // kappa t_0 / (rho_0 C_p l_0^2)
    double Q_0;                       // t_0 g_0 I_0 / (rho_0 C_p T_0)
    double lambda_hat_s;              // wavelength in units of l_0 (per convention)
    double L_tilde;                   // computational fiber length [l_0]
    double dt_hat, t_max_hat;
    double P_s_in_hat, P_p_in_hat;    // launch powers [P_0]

    double omega_hat(FieldId k) const { return k == FieldId::signal ? omega_hat_s : omega_hat_p; }
};

inline double numerical_aperture(const PhysicalParams& phys) {
    if (!(phys.n_core > phys.n_clad))
        throw invalid_parameter("numerical_aperture: require n_core > n_clad");
    return std::sqrt(phys.n_core * phys.n_core - phys.n_clad * phys.n_clad);
}

inline double v_number(const PhysicalParams& phys, double lambda) {
    if (!(lambda > 0.0)) throw invalid_parameter("v_number: lambda must be positive");
    return 2.0 * std::numbers::pi / lambda * phys.r_core * numerical_aperture(phys);
}

inline NondimParams nondimensionalize(const PhysicalParams& phys, const Scales& scales,
                                      const SimulationConfig& cfg) {
    phys.validate();
    NondimParams nd;
    nd.omega_hat_s = 2.0 * std::numbers::pi * scales.l_0 / phys.lambda_s;
    nd.omega_hat_p = 2.0 * std::numbers::pi * scales.l_0 / phys.lambda_p;
    nd.l0g0 = scales.l_0 * scales.g_0;
    nd.gain_scale = cfg.gain_scale;

    double lam = phys.lambda_s;
    if (cfg.wavelength_convention == WavelengthConvention::medium) lam /= phys.n_core;
    nd.lambda_hat_s = lam / scales.l_0;
    nd.L_tilde = cfg.num_wavelengths * nd.lambda_hat_s;

    if (cfg.alpha_z_override) {
        nd.alpha_z = *cfg.alpha_z_override;
    } else {
        nd.alpha_z = nd.L_tilde * scales.l_0 / phys.L_real;
    }
    if (!(nd.alpha_z > 0.0 && nd.alpha_z <= 1.0))
        throw invalid_parameter("alpha_z must lie in (0, 1]; shorten L_tilde or lengthen L_real");

    nd.alpha_0 = phys.kappa * scales.t_0 / (phys.rho_0 * phys.C_p * scales.l_0 * scales.l_0);
    nd.Q_0 = scales.t_0 * scales.g_0 * scales.I_0 / (phys.rho_0 * phys.C_p * scales.T_0);
    nd.dt_hat = cfg.dt_ms * 1e-3 / scales.t_0;
    nd.t_max_hat = cfg.t_max_ms * 1e-3 / scales.t_0;
    nd.P_s_in_hat = phys.P_s_in / scales.P_0;
    nd.P_p_in_hat = phys.P_p_in / scales.P_0;
    return nd;
}

}  // namespace fiberamp

#endif
