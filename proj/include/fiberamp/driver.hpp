#ifndef FIBERAMP_DRIVER_HPP
#define FIBERAMP_DRIVER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fiberamp/config.hpp"
#include "fiberamp/gain.hpp"
#include "fiberamp/heat.hpp"
#include "fiberamp/maxwell.hpp"
#include "fiberamp/mesh.hpp"
#include "fiberamp/modes.hpp"
#include "fiberamp/params.hpp"

namespace fiberamp {

/// Temperature-dependent material state shared by both optical systems.
/// An empty dT means ambient temperature everywhere.
struct MaterialState {
    std::shared_ptr<const HeatState> dT;
};

struct PicardResult {
    FieldSolution E_s, E_p;
    std::vector<double> rel_change;     // per iteration
    std::vector<double> eta_s, eta_p;   // DPG residuals (when tracked)
    int iterations = 0;
    bool converged = false;
};

struct StepRecord {
    double t_hat = 0.0;
    int picard_iters = 0;
    double picard_rel_change = 0.0;
    double peak_dT = 0.0;          // [T_0]
    double peak_dT_x = 0.0, peak_dT_z = 0.0;
    double dT_change = 0.0;        // L^2 norm of the temperature increment
    double boundary_flux = 0.0;    // outward heat flow
    double volumetric_heat = 0.0;  // deposited heat
    std::vector<double> P_s, P_p;  // power flux at interior interfaces 0..n_z_interior
};

struct CoupledResult {
    PicardResult fields;
    HeatState dT;
    std::vector<StepRecord> history;
};

/// Optical-to-optical conversion efficiency along the fiber,
/// eta(z_j) = (P_s(z_j) - P_s(0)) / (P_p(0) - P_p(z_j)), guarded against a
/// vanishing pump-depletion denominator.
inline std::vector<double> efficiency_curve(const std::vector<double>& P_s,
                                            const std::vector<double>& P_p) {
    if (P_s.size() != P_p.size() || P_s.empty())
        throw std::invalid_argument("efficiency_curve: mismatched power curves");
    std::vector<double> eta(P_s.size(), 0.0);
    double guard = 1e-9 * std::abs(P_p[0]);
    for (std::size_t j = 0; j < P_s.size(); ++j) {
        double den = P_p[0] - P_p[j];
        eta[j] = std::abs(den) > guard ? (P_s[j] - P_s[0]) / den : 0.0;
    }
    return eta;
}

/// Orchestrates the coupled amplifier simulation: two Maxwell systems
/// (signal + pump) Picard-iterated through the saturable gain, feeding the
/// quantum-defect heat source into the thermal solve, which in turn shifts
/// the refractive index.
class Driver {
public:
    explicit Driver(const SimulationConfig& cfg)
        : cfg_(cfg),
          phys_(PhysicalParams::from_config(cfg)),
          scales_(Scales::from_config(cfg)),
          nd_(nondimensionalize(phys_, scales_, cfg)),
          mesh_(build_layered_mesh(cfg, nd_, scales_, phys_)) {
        SlabGeometry geom{mesh_.r_core_hat, phys_.n_core, phys_.n_clad};
        mode_s_ = solve_fundamental_mode(nd_.omega_hat_s, geom, 1e-12, nd_.P_s_in_hat);
        mode_p_ = solve_fundamental_mode(nd_.omega_hat_p, geom, 1e-12, nd_.P_p_in_hat);
        inlet_s_ = mode_trace(mode_s_, mesh_, cfg.order_p);
        inlet_p_ = mode_trace(mode_p_, mesh_, cfg.order_p);
    }

    const Mesh& mesh() const { return mesh_; }
    const PhysicalParams& phys() const { return phys_; }
    const Scales& scales() const { return scales_; }
    const NondimParams& nondim() const { return nd_; }
    const ModeSolution& mode(FieldId k) const {
        return k == FieldId::signal ? mode_s_ : mode_p_;
    }

    /// Refractive index including the thermo-optic shift inside the heat
    /// domain; the cold index is piecewise constant per element.
    double refractive_index(const MaterialState& mat, int e, double x, double z) const {
        double n = mesh_.elems[e].core ? phys_.n_core : phys_.n_clad;
        if (mat.dT && !mat.dT->elem.empty() && e < mesh_.n_x * mesh_.n_z_interior)
            n += phys_.dn_dT * scales_.T_0 * mat.dT->eval(mesh_, e, x, z);
        return n;
    }

    /// Pointwise irradiances [W/m^2] of both fields from previous-iterate
    /// solutions (null pointer = dark field).
    void irradiances(const FieldSolution* Es, const FieldSolution* Ep,
                     const MaterialState& mat, int e, double x, double z, double& I_s,
                     double& I_p) const {
        double n = refractive_index(mat, e, x, z);
        I_s = I_p = 0.0;
        if (cfg_.irradiance_model == IrradianceModel::plane_wave) {
            if (Es) I_s = scales_.I_0 * irradiance_hat(Es->eval_E(mesh_, e, x, z), n);
            if (Ep) I_p = scales_.I_0 * irradiance_hat(Ep->eval_E(mesh_, e, x, z), n);
        } else {
            if (Es)
                I_s = scales_.I_0 * irradiance_poynting(Es->eval_E(mesh_, e, x, z),
                                                        Es->eval_Hx(mesh_, e, x, z),
                                                        Es->eval_Hz(mesh_, e, x, z));
            if (Ep)
                I_p = scales_.I_0 * irradiance_poynting(Ep->eval_E(mesh_, e, x, z),
                                                        Ep->eval_Hx(mesh_, e, x, z),
                                                        Ep->eval_Hz(mesh_, e, x, z));
        }
    }

    /// Non-dimensional core-confined gain g/g_0 of field k evaluated from
    /// previous-iterate fields.
    std::function<double(int, double, double)> gain_function(
        FieldId k, const FieldSolution* Es, const FieldSolution* Ep,
        const MaterialState& mat) const {
        return [this, k, Es, Ep, mat](int e, double x, double z) {
            if (!mesh_.elems[e].core) return 0.0;
            double I_s, I_p;
            irradiances(Es, Ep, mat, e, x, z, I_s, I_p);
            return gain_coefficient(k, I_s, I_p, phys_) / scales_.g_0;
        };
    }

    /// Non-dimensional quantum-defect heat source Q^ = Q/(g_0 I_0) from the
    /// converged fields; zero outside the core.
    std::function<double(int, double, double)> heat_source_function(
        const FieldSolution* Es, const FieldSolution* Ep, const MaterialState& mat) const {
        // a zero gain scale means a passive fiber: no stimulated transitions,
        // hence no quantum-defect heat either
        if (cfg_.gain_scale == 0.0)
            return [](int, double, double) { return 0.0; };
        return [this, Es, Ep, mat](int e, double x, double z) {
            if (!mesh_.elems[e].core) return 0.0;
            double I_s, I_p;
            irradiances(Es, Ep, mat, e, x, z, I_s, I_p);
            return heat_source(I_s, I_p, phys_) / (scales_.g_0 * scales_.I_0);
        };
    }

    MaxwellProblem make_problem(FieldId k, const MaterialState& mat,
                                std::function<double(int, double, double)> g_of) const {
        MaxwellProblem pr;
        pr.mesh = &mesh_;
        pr.p = cfg_.order_p;
        pr.dp = cfg_.delta_p;
        pr.omega_hat = nd_.omega_hat(k);
        pr.gain_factor = nd_.l0g0 * nd_.gain_scale;
        pr.n_of = [this, mat](int e, double x, double z) {
            return refractive_index(mat, e, x, z);
        };
        pr.g_of = std::move(g_of);
        pr.pml = PmlSpec{mesh_.L_tilde, mesh_.pml_length, cfg_.pml_sigma_max, pr.omega_hat};
        pr.inlet_trace = k == FieldId::signal ? inlet_s_ : inlet_p_;
        return pr;
    }

    /// Fixed-point iteration on the gain nonlinearity: each sweep solves the
    /// signal and pump systems with the gain frozen at the previous iterate
    /// (dark fields on a cold start). Convergence is measured by the relative
    /// L^2 change of the signal field.
    PicardResult picard_solve(const MaterialState& mat, const FieldSolution* warm_s = nullptr,
                              const FieldSolution* warm_p = nullptr,
                              bool track_residuals = false) const {
        PicardResult res;
        std::optional<FieldSolution> prev_s, prev_p;
        if (warm_s && warm_p) {
            prev_s = *warm_s;
            prev_p = *warm_p;
        }
        for (int it = 1; it <= cfg_.picard_max_iters; ++it) {
            const FieldSolution* ps = prev_s ? &*prev_s : nullptr;
            const FieldSolution* pp = prev_p ? &*prev_p : nullptr;
            MaxwellProblem prob_s = make_problem(FieldId::signal, mat,
                                                 gain_function(FieldId::signal, ps, pp, mat));
            MaxwellProblem prob_p = make_problem(FieldId::pump, mat,
                                                 gain_function(FieldId::pump, ps, pp, mat));
            FieldSolution sol_s = solve_linear_maxwell(prob_s);
            FieldSolution sol_p = solve_linear_maxwell(prob_p);
            if (track_residuals) {
                res.eta_s.push_back(residual(prob_s, sol_s).total);
                res.eta_p.push_back(residual(prob_p, sol_p).total);
            }
            double norm = l2_norm_E(mesh_, sol_s);
            double rel = 1.0;
            if (ps && norm > 0.0) rel = l2_diff_E(mesh_, sol_s, *ps) / norm;
            res.rel_change.push_back(rel);
            res.iterations = it;
            prev_s = std::move(sol_s);
            prev_p = std::move(sol_p);
            if (rel < cfg_.picard_tol) {
                res.converged = true;
                break;
            }
        }
        res.E_s = std::move(*prev_s);
        res.E_p = std::move(*prev_p);
        return res;
    }

    /// Power-flux curves of both fields at the interior interfaces.
    void power_curves(const PicardResult& pr, std::vector<double>& P_s,
                      std::vector<double>& P_p) const {
        P_s.clear();
        P_p.clear();
        for (int j = 0; j <= mesh_.n_z_interior; ++j) {
            P_s.push_back(power_flux(mesh_, pr.E_s, j));
            P_p.push_back(power_flux(mesh_, pr.E_p, j));
        }
    }

    /// Peak temperature rise, sampled on a tensor grid in each heat element.
    static void peak_temperature(const Mesh& mesh, const HeatState& dT, double& peak,
                                 double& px, double& pz) {
        peak = 0.0;
        px = pz = 0.0;
        const double pts[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
        int n_elem = mesh.n_x * mesh.n_z_interior;
        for (int e = 0; e < n_elem; ++e) {
            const Mesh::Elem& el = mesh.elems[e];
            for (double a : pts)
                for (double b : pts) {
                    double x = 0.5 * (el.x0 + el.x1) + 0.5 * (el.x1 - el.x0) * a;
                    double z = 0.5 * (el.z0 + el.z1) + 0.5 * (el.z1 - el.z0) * b;
                    double v = dT.eval(mesh, e, x, z);
                    if (v > peak) {
                        peak = v;
                        px = x;
                        pz = z;
                    }
                }
        }
    }

    /// Full thermally coupled run: backward-Euler time stepping of the heat
    /// equation with a Picard solve of the optical systems per step (warm
    /// started from the previous step).
    CoupledResult coupled_run(
        const std::function<void(const StepRecord&)>& on_step = nullptr) const {
        HeatSolver heat(mesh_, cfg_.order_p, cfg_.delta_p, nd_.alpha_0, nd_.alpha_z, nd_.dt_hat,
                        nd_.Q_0, cfg_.heat_z_bc);
        CoupledResult out;
        auto dT = std::make_shared<HeatState>(heat.initial_state());
        std::optional<PicardResult> warm;
        int n_steps = std::max(1, static_cast<int>(std::llround(nd_.t_max_hat / nd_.dt_hat)));
        for (int step = 1; step <= n_steps; ++step) {
            MaterialState mat{dT};
            PicardResult pr = warm ? picard_solve(mat, &warm->E_s, &warm->E_p)
                                   : picard_solve(mat);
            auto Qfn = heat_source_function(&pr.E_s, &pr.E_p, mat);
            auto next = std::make_shared<HeatState>(heat.step(*dT, Qfn));
            check_material_bounds(*next);

            StepRecord rec;
            rec.t_hat = step * nd_.dt_hat;
            rec.picard_iters = pr.iterations;
            rec.picard_rel_change = pr.rel_change.empty() ? 0.0 : pr.rel_change.back();
            peak_temperature(mesh_, *next, rec.peak_dT, rec.peak_dT_x, rec.peak_dT_z);
            rec.boundary_flux = heat.boundary_heat_flux(*next);
            rec.volumetric_heat = heat.volumetric_heat(Qfn);
            power_curves(pr, rec.P_s, rec.P_p);
            {
                HeatState diff = *next;
                for (std::size_t e = 0; e < diff.elem.size(); ++e) diff.elem[e] -= dT->elem[e];
                rec.dT_change = heat_l2_norm(mesh_, diff);
            }
            if (on_step) on_step(rec);
            out.history.push_back(std::move(rec));

            dT = next;
            warm = std::move(pr);
        }
        out.fields = std::move(*warm);
        out.dT = *dT;
        return out;
    }

private:
    /// The thermo-optic index shift must stay a small perturbation.
    void check_material_bounds(const HeatState& dT) const {
        double peak, px, pz;
        peak_temperature(mesh_, dT, peak, px, pz);
        double dn = std::abs(phys_.dn_dT * scales_.T_0) * std::abs(peak);
        if (!std::isfinite(peak))
            throw numerical_breakdown("temperature field is not finite");
        if (dn > 1e-2)
            throw numerical_breakdown("thermo-optic index shift " + std::to_string(dn) +
                                      " exceeds the perturbative bound 1e-2");
    }

    SimulationConfig cfg_;
    PhysicalParams phys_;
    Scales scales_;
    NondimParams nd_;
    Mesh mesh_;
    ModeSolution mode_s_, mode_p_;
    std::vector<Eigen::VectorXd> inlet_s_, inlet_p_;
};

}  // namespace fiberamp

#endif
