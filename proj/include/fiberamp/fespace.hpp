#ifndef FIBERAMP_FESPACE_HPP
#define FIBERAMP_FESPACE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fiberamp {

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
    std::vector<double> pts, wts;
    int size() const { return static_cast<int>(pts.size()); }
};

/// n-point Gauss-Legendre rule (exact through degree 2n-1). Nodes by Newton
/// iteration on the Legendre polynomial with the standard Chebyshev initial
/// guess.
inline QuadratureRule gauss_rule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_rule: need n >= 1");
    QuadratureRule r;
    r.pts.resize(n);
    r.wts.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.pts[i] = x;
        r.wts[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

/// Gauss rule with ceil((degree+1)/2) points per direction.
inline QuadratureRule quadrature_rule(int degree) {
    if (degree < 0) throw std::invalid_argument("quadrature_rule: degree must be >= 0");
    return gauss_rule((degree + 2) / 2 > 0 ? (degree + 2) / 2 : 1);
}

enum class BasisFamily { h1, l2, trace };

/// 1D shape functions tabulated at the points of a quadrature rule.
///   l2   : Legendre polynomials P_0..P_p (orthogonal, discontinuous).
///   h1   : two vertex functions (1 -+ xi)/2 followed by p-1 integrated
///          Legendre (Lobatto) bubbles.
///   trace: identical to l2; used for skeleton flux unknowns.
/// val(i, q), der(i, q) index function i at point q.
struct Basis {
    BasisFamily family;
    int p;
    Eigen::MatrixXd val, der;
    int size() const { return static_cast<int>(val.rows()); }
};

namespace detail {

/// Legendre values and derivatives P_0..P_p at x.
inline void legendre_all(int p, double x, double* v, double* d) {
    v[0] = 1.0;
    d[0] = 0.0;
    if (p >= 1) {
        v[1] = x;
        d[1] = 1.0;
    }
    for (int j = 2; j <= p; ++j) {
        v[j] = ((2 * j - 1) * x * v[j - 1] - (j - 1) * v[j - 2]) / j;
        d[j] = d[j - 2] + (2 * j - 1) * v[j - 1];
    }
}

}  // namespace detail

inline Basis tabulate(BasisFamily family, int p, const QuadratureRule& rule) {
    if (family == BasisFamily::h1 && p < 1)
        throw std::invalid_argument("tabulate: h1 requires p >= 1");
    if (p < 0) throw std::invalid_argument("tabulate: p must be >= 0");
    int nq = rule.size();
    int n = p + 1;
    Basis b;
    b.family = family;
    b.p = p;
    b.val.resize(n, nq);
    b.der.resize(n, nq);
    std::vector<double> v(p + 2), d(p + 2);
    for (int q = 0; q < nq; ++q) {
        double x = rule.pts[q];
        detail::legendre_all(p + 1, x, v.data(), d.data());
        if (family == BasisFamily::l2 || family == BasisFamily::trace) {
            for (int j = 0; j <= p; ++j) {
                b.val(j, q) = v[j];
                b.der(j, q) = d[j];
            }
        } else {
            b.val(0, q) = 0.5 * (1.0 - x);
            b.der(0, q) = -0.5;
            b.val(1, q) = 0.5 * (1.0 + x);
            b.der(1, q) = 0.5;
            // Lobatto bubbles psi_j = (L_j - L_{j-2}) / sqrt(2(2j-1)), j = 2..p
            for (int j = 2; j <= p; ++j) {
                double s = 1.0 / std::sqrt(2.0 * (2 * j - 1));
                b.val(j, q) = s * (v[j] - v[j - 2]);
                b.der(j, q) = s * (d[j] - d[j - 2]);
            }
        }
    }
    return b;
}

/// Evaluate the Legendre (l2) expansion with coefficients c at reference
/// coordinate x in [-1, 1].
inline double legendre_eval(const Eigen::VectorXd& c, double x) {
    int p = static_cast<int>(c.size()) - 1;
    std::vector<double> v(p + 1), d(p + 1);
    detail::legendre_all(p, x, v.data(), d.data());
    double s = 0.0;
    for (int j = 0; j <= p; ++j) s += c[j] * v[j];
    return s;
}

/// Values (and derivatives) of the 1D h1 basis at an arbitrary point.
inline void h1_point(int p, double x, double* v, double* d) {
    std::vector<double> lv(p + 2), ld(p + 2);
    detail::legendre_all(p + 1, x, lv.data(), ld.data());
    v[0] = 0.5 * (1.0 - x);
    d[0] = -0.5;
    v[1] = 0.5 * (1.0 + x);
    d[1] = 0.5;
    for (int j = 2; j <= p; ++j) {
        double s = 1.0 / std::sqrt(2.0 * (2 * j - 1));
        v[j] = s * (lv[j] - lv[j - 2]);
        d[j] = s * (ld[j] - ld[j - 2]);
    }
}

/// Values of the 1D Legendre basis at an arbitrary point.
inline void l2_point(int p, double x, double* v) {
    std::vector<double> lv(p + 1), ld(p + 1);
    detail::legendre_all(p, x, lv.data(), ld.data());
    for (int j = 0; j <= p; ++j) v[j] = lv[j];
}

}  // namespace fiberamp

#endif
