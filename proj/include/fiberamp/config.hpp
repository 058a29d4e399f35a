#ifndef FIBERAMP_CONFIG_HPP
#define FIBERAMP_CONFIG_HPP

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fiberamp {

/// Error raised for malformed or invalid configuration input.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WavelengthConvention { vacuum, medium };
enum class IrradianceModel { plane_wave, poynting };
enum class TransverseGrading { uniform, geometric };
enum class HeatZBoundary { dirichlet, insulated };

/// All user-settable inputs. Defaults describe the reference Yb-doped
/// step-index fiber; every value can be overridden through the
/// `key = value` config file format parsed below.
struct SimulationConfig {
    // Active gain model
    double sigma_abs_signal = 6e-27;     // [m^2/ion]
    double sigma_ems_signal = 3.58e-25;  // [m^2/ion]
    double sigma_abs_pump = 1.429e-24;   // [m^2/ion]
    double sigma_ems_pump = 1.776e-24;   // [m^2/ion]
    double dopant_concentration = 6e25;  // [ion/m^3]
    double upper_level_lifetime_s = 8e-4;

    // Step-index fiber
    double r_core_um = 12.7;
    double r_clad_um = 127.0;
    double n_core = 1.4512;
    double n_clad = 1.4500;
    double lambda_signal_nm = 1064.0;
    double lambda_pump_nm = 976.0;
    double fiber_length_m = 10.0;
    double launch_power_signal_W = 1.0;
    double launch_power_pump_W = 10.0;

    // Heat coupling model
    double heat_capacity = 703.0;           // C_p [W s/(kg K)]
    double density = 2201.0;                // rho_0 [kg/m^3]
    double thermal_conductivity = 1.38;     // kappa [W/(m K)]
    double dn_dT = 1.285e-5;                // [1/K]

    // Dimensional scales
    double l_0_m = 1e-5;
    double I_0 = 1e10;       // [W/m^2]
    double sigma_0 = 1e-26;  // [m^2/ion]
    double nu_0 = 1e25;      // [ion/m^3]
    double T_0 = 1.0;        // [K]
    double t_0_s = 1e-3;

    // Discretization
    int num_wavelengths = 15;
    int elems_per_wavelength = 2;
    int n_transverse_elems = 8;
    int order_p = 5;
    int delta_p = 2;
    int pml_wavelengths = 3;
    double pml_sigma_max = 40.0;

    // Nonlinear solve and time stepping
    double gain_scale = 4e4;  // g~_a
    double picard_tol = 1e-4;
    int picard_max_iters = 50;
    double dt_ms = 0.1;
    double t_max_ms = 20.0;

    // Modeling switches
    WavelengthConvention wavelength_convention = WavelengthConvention::vacuum;
    IrradianceModel irradiance_model = IrradianceModel::plane_wave;
    TransverseGrading transverse_grading = TransverseGrading::uniform;
    HeatZBoundary heat_z_bc = HeatZBoundary::dirichlet;
    std::optional<double> alpha_z_override;  // default: computed from fiber_length_m

    void validate() const;
};

inline void SimulationConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw config_error(std::string(name) + " must be positive and finite");
    };
    positive(sigma_abs_signal, "sigma_abs_signal");
    positive(sigma_ems_signal, "sigma_ems_signal");
    positive(sigma_abs_pump, "sigma_abs_pump");
    positive(sigma_ems_pump, "sigma_ems_pump");
    positive(dopant_concentration, "dopant_concentration");
    positive(upper_level_lifetime_s, "upper_level_lifetime_s");
    positive(r_core_um, "r_core_um");
    positive(r_clad_um, "r_clad_um");
    positive(lambda_signal_nm, "lambda_signal_nm");
    positive(lambda_pump_nm, "lambda_pump_nm");
    positive(fiber_length_m, "fiber_length_m");
    positive(heat_capacity, "heat_capacity");
    positive(density, "density");
    positive(thermal_conductivity, "thermal_conductivity");
    positive(l_0_m, "l_0_m");
    positive(I_0, "I_0");
    positive(sigma_0, "sigma_0");
    positive(nu_0, "nu_0");
    positive(T_0, "T_0");
    positive(t_0_s, "t_0_s");
    positive(picard_tol, "picard_tol");
    positive(dt_ms, "dt_ms");
    positive(t_max_ms, "t_max_ms");
    if (launch_power_signal_W < 0.0 || launch_power_pump_W < 0.0)
        throw config_error("launch powers must be non-negative");
    if (gain_scale < 0.0) throw config_error("gain_scale must be non-negative");
    if (!(n_clad > 1.0)) throw config_error("n_clad must exceed 1");
    if (!(n_core > n_clad)) throw config_error("n_core must exceed n_clad");
    if (!(lambda_pump_nm < lambda_signal_nm))
        throw config_error("pump wavelength must be shorter than signal wavelength");
    if (!(r_core_um < r_clad_um)) throw config_error("r_core_um must be less than r_clad_um");
    if (num_wavelengths < 1) throw config_error("num_wavelengths must be >= 1");
    if (elems_per_wavelength < 1) throw config_error("elems_per_wavelength must be >= 1");
    if (n_transverse_elems < 4) throw config_error("n_transverse_elems must be >= 4");
    if (n_transverse_elems % 2 != 0) throw config_error("n_transverse_elems must be even");
    if (order_p < 1) throw config_error("order_p must be >= 1");
    if (delta_p < 1) throw config_error("delta_p must be >= 1");
    if (pml_wavelengths < 1) throw config_error("pml_wavelengths must be >= 1");
    if (picard_max_iters < 1) throw config_error("picard_max_iters must be >= 1");
    if (alpha_z_override && !(*alpha_z_override > 0.0 && *alpha_z_override <= 1.0))
        throw config_error("alpha_z must lie in (0, 1]");
}

namespace detail {

inline double parse_double(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": malformed number '" + s + "'");
    }
}

inline int parse_int(const std::string& s, int line) {
    double v = parse_double(s, line);
    if (v != std::floor(v))
        throw config_error("line " + std::to_string(line) + ": expected integer, got '" + s + "'");
    return static_cast<int>(v);
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses the line-based `key = value` config format. `#` starts a comment.
/// Unknown keys are rejected; omitted keys keep their built-in defaults.
inline SimulationConfig parse_config(const std::string& text) {
    SimulationConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::string line = detail::trim(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw config_error("line " + std::to_string(lineno) + ": expected 'key = value'");

        auto d = [&](double& field) { field = detail::parse_double(val, lineno); };
        auto i = [&](int& field) { field = detail::parse_int(val, lineno); };

        if (key == "sigma_abs_signal") d(cfg.sigma_abs_signal);
        else if (key == "sigma_ems_signal") d(cfg.sigma_ems_signal);
        else if (key == "sigma_abs_pump") d(cfg.sigma_abs_pump);
        else if (key == "sigma_ems_pump") d(cfg.sigma_ems_pump);
        else if (key == "dopant_concentration") d(cfg.dopant_concentration);
        else if (key == "upper_level_lifetime_s") d(cfg.upper_level_lifetime_s);
        else if (key == "r_core_um") d(cfg.r_core_um);
        else if (key == "r_clad_um") d(cfg.r_clad_um);
        else if (key == "n_core") d(cfg.n_core);
        else if (key == "n_clad") d(cfg.n_clad);
        else if (key == "lambda_signal_nm") d(cfg.lambda_signal_nm);
        else if (key == "lambda_pump_nm") d(cfg.lambda_pump_nm);
        else if (key == "fiber_length_m") d(cfg.fiber_length_m);
        else if (key == "launch_power_signal_W") d(cfg.launch_power_signal_W);
        else if (key == "launch_power_pump_W") d(cfg.launch_power_pump_W);
        else if (key == "heat_capacity") d(cfg.heat_capacity);
        else if (key == "density") d(cfg.density);
        else if (key == "thermal_conductivity") d(cfg.thermal_conductivity);
        else if (key == "dn_dT") d(cfg.dn_dT);
        else if (key == "l_0_m") d(cfg.l_0_m);
        else if (key == "I_0") d(cfg.I_0);
        else if (key == "sigma_0") d(cfg.sigma_0);
        else if (key == "nu_0") d(cfg.nu_0);
        else if (key == "T_0") d(cfg.T_0);
        else if (key == "t_0_s") d(cfg.t_0_s);
        else if (key == "num_wavelengths") i(cfg.num_wavelengths);
        else if (key == "elems_per_wavelength") i(cfg.elems_per_wavelength);
        else if (key == "n_transverse_elems") i(cfg.n_transverse_elems);
        else if (key == "order_p") i(cfg.order_p);
        else if (key == "delta_p") i(cfg.delta_p);
        else if (key == "pml_wavelengths") i(cfg.pml_wavelengths);
        else if (key == "pml_sigma_max") d(cfg.pml_sigma_max);
        else if (key == "gain_scale") d(cfg.gain_scale);
        else if (key == "picard_tol") d(cfg.picard_tol);
        else if (key == "picard_max_iters") i(cfg.picard_max_iters);
        else if (key == "dt_ms") d(cfg.dt_ms);
        else if (key == "t_max_ms") d(cfg.t_max_ms);
        else if (key == "alpha_z") {
            double v = detail::parse_double(val, lineno);
            cfg.alpha_z_override = v;
        } else if (key == "wavelength_convention") {
            if (val == "vacuum") cfg.wavelength_convention = WavelengthConvention::vacuum;
            else if (val == "medium") cfg.wavelength_convention = WavelengthConvention::medium;
            else throw config_error("line " + std::to_string(lineno) +
                                    ": wavelength_convention must be 'vacuum' or 'medium'");
        } else if (key == "irradiance_model") {
            if (val == "plane_wave") cfg.irradiance_model = IrradianceModel::plane_wave;
            else if (val == "poynting") cfg.irradiance_model = IrradianceModel::poynting;
            else throw config_error("line " + std::to_string(lineno) +
                                    ": irradiance_model must be 'plane_wave' or 'poynting'");
        } else if (key == "transverse_grading") {
            if (val == "uniform") cfg.transverse_grading = TransverseGrading::uniform;
            else if (val == "geometric") cfg.transverse_grading = TransverseGrading::geometric;
            else throw config_error("line " + std::to_string(lineno) +
                                    ": transverse_grading must be 'uniform' or 'geometric'");
        } else if (key == "heat_z_bc") {
            if (val == "dirichlet") cfg.heat_z_bc = HeatZBoundary::dirichlet;
            else if (val == "insulated") cfg.heat_z_bc = HeatZBoundary::insulated;
            else throw config_error("line " + std::to_string(lineno) +
                                    ": heat_z_bc must be 'dirichlet' or 'insulated'");
        } else {
            throw config_error("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    try {
        cfg.validate();
    } catch (const config_error& e) {
        throw config_error(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

}  // namespace fiberamp

#endif
