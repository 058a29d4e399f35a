#ifndef FIBERAMP_MODES_HPP
#define FIBERAMP_MODES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fiberamp/fespace.hpp"
#include "fiberamp/mesh.hpp"
#include "fiberamp/params.hpp"

namespace fiberamp {

/// Fundamental even TE mode of the symmetric step-index slab, non-dimensional
/// form. Dispersion relation kappa tan(kappa a) = gamma with
/// kappa^2 = n_core^2 w^2 - beta^2, gamma^2 = beta^2 - n_clad^2 w^2.
struct ModeSolution {
    double omega_hat;
    double beta;        // propagation constant [1/l_0]
    double n_eff;       // beta / omega_hat
    double kappa_core;  // transverse wavenumber in the core
    double gamma_clad;  // decay rate in the cladding
    double a;           // core half-width [l_0]
    double amplitude;   // peak field amplitude (profile(0) = amplitude)

    /// Transverse profile E(x), even, continuous at |x| = a.
    double profile(double x) const {
        double ax = std::abs(x);
        if (ax <= a) return amplitude * std::cos(kappa_core * x);
        return amplitude * std::cos(kappa_core * a) * std::exp(-gamma_clad * (ax - a));
    }

    /// Integral of profile^2 over (-inf, inf), closed form.
    double profile_sq_integral() const {
        double ca = std::cos(kappa_core * a);
        return amplitude * amplitude *
               (a + std::sin(2.0 * kappa_core * a) / (2.0 * kappa_core) + ca * ca / gamma_clad);
    }

    /// Non-dimensional cross-sectional power flux of the mode,
    /// P = (beta / (2 omega)) int |E|^2 dx.
    double power() const { return 0.5 * (beta / omega_hat) * profile_sq_integral(); }
};

struct SlabGeometry {
    double a;  // core half-width [l_0]
    double n_core, n_clad;
};

/// Solves for the lowest-order even TE mode by bisection on the first branch
/// of kappa tan(kappa a) - gamma, normalized to unit launch power by default.
inline ModeSolution solve_fundamental_mode(double omega_hat, const SlabGeometry& geom,
                                           double tol = 1e-12, double launch_power = 1.0) {
    if (!(geom.n_core > geom.n_clad))
        throw invalid_parameter("solve_fundamental_mode: require n_core > n_clad");
    if (!(tol > 0.0)) throw invalid_parameter("solve_fundamental_mode: tol must be positive");
    double a = geom.a;
    double R = omega_hat * std::sqrt(geom.n_core * geom.n_core - geom.n_clad * geom.n_clad);
    // even fundamental branch: kappa a in (0, pi/2), kappa < R
    double hi = std::min(R, 0.5 * M_PI / a) * (1.0 - 1e-14);
    double lo = hi * 1e-12;
    auto f = [&](double kappa) {
        double gamma = std::sqrt(std::max(R * R - kappa * kappa, 0.0));
        return kappa * std::tan(kappa * a) - gamma;
    };
    if (!(f(lo) < 0.0 && f(hi) > 0.0))
        throw std::runtime_error("solve_fundamental_mode: bracketing failed");
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    ModeSolution m;
    m.omega_hat = omega_hat;
    m.a = a;
    m.kappa_core = 0.5 * (lo + hi);
    m.gamma_clad = std::sqrt(R * R - m.kappa_core * m.kappa_core);
    m.beta = std::sqrt(geom.n_core * geom.n_core * omega_hat * omega_hat -
                       m.kappa_core * m.kappa_core);
    m.n_eff = m.beta / omega_hat;
    m.amplitude = 1.0;
    if (launch_power > 0.0) m.amplitude = std::sqrt(launch_power / m.power());
    else m.amplitude = 0.0;
    return m;
}

/// Inlet trace coefficients of a transverse profile: per inlet edge, the 1D
/// h1 expansion with endpoint values interpolated and bubbles fitted by
/// constrained L^2 projection.
/// Returns one coefficient vector (size p+1: v0, v1, bubbles) per edge column.
inline std::vector<Eigen::VectorXd> project_profile_on_interface(
    const Mesh& mesh, int p, const std::function<double(double)>& profile) {
    QuadratureRule rule = gauss_rule(p + 3);
    Basis b = tabulate(BasisFamily::h1, p, rule);
    int nq = rule.size();
    std::vector<Eigen::VectorXd> out;
    out.reserve(mesh.n_x);
    for (int ix = 0; ix < mesh.n_x; ++ix) {
        double x0 = mesh.x_breaks[ix], x1 = mesh.x_breaks[ix + 1];
        Eigen::VectorXd c = Eigen::VectorXd::Zero(p + 1);
        c[0] = profile(x0);
        c[1] = profile(x1);
        if (p >= 2) {
            int nb = p - 1;
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, nb);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
            for (int q = 0; q < nq; ++q) {
                double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * rule.pts[q];
                double resid = profile(x) - c[0] * b.val(0, q) - c[1] * b.val(1, q);
                for (int i = 0; i < nb; ++i) {
                    rhs[i] += rule.wts[q] * b.val(i + 2, q) * resid;
                    for (int j = 0; j < nb; ++j)
                        M(i, j) += rule.wts[q] * b.val(i + 2, q) * b.val(j + 2, q);
                }
            }
            c.tail(nb) = M.ldlt().solve(rhs);
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<Eigen::VectorXd> mode_trace(const ModeSolution& mode, const Mesh& mesh,
                                               int p) {
    return project_profile_on_interface(mesh, p,
                                        [&](double x) { return mode.profile(x); });
}

}  // namespace fiberamp

#endif
