#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fiberamp/fespace.hpp"

using namespace fiberamp;
using Catch::Approx;

TEST_CASE("Gauss rules integrate polynomials exactly") {
    for (int n = 1; n <= 12; ++n) {
        QuadratureRule r = gauss_rule(n);
        REQUIRE(r.size() == n);
        double sum = 0.0;
        for (double w : r.wts) sum += w;
        CHECK(sum == Approx(2.0).epsilon(1e-14));
        // exact through degree 2n-1
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double got = 0.0;
            for (int q = 0; q < n; ++q) got += r.wts[q] * std::pow(r.pts[q], d);
            double expect = d % 2 == 1 ? 0.0 : 2.0 / (d + 1);
            CHECK(got == Approx(expect).margin(1e-13));
        }
    }
}

TEST_CASE("quadrature_rule picks enough points for a target degree") {
    for (int d = 0; d <= 20; ++d) {
        QuadratureRule r = quadrature_rule(d);
        CHECK(2 * r.size() - 1 >= d);
    }
}

TEST_CASE("Legendre basis is orthogonal with known norms") {
    int p = 6;
    QuadratureRule r = gauss_rule(p + 1);
    Basis b = tabulate(BasisFamily::l2, p, r);
    for (int i = 0; i <= p; ++i)
        for (int j = 0; j <= p; ++j) {
            double acc = 0.0;
            for (int q = 0; q < r.size(); ++q) acc += r.wts[q] * b.val(i, q) * b.val(j, q);
            double expect = i == j ? 2.0 / (2 * i + 1) : 0.0;
            CHECK(acc == Approx(expect).margin(1e-13));
        }
}

TEST_CASE("h1 basis endpoint values") {
    int p = 5;
    std::vector<double> v(p + 1), d(p + 1);
    h1_point(p, -1.0, v.data(), d.data());
    CHECK(v[0] == Approx(1.0));
    CHECK(v[1] == Approx(0.0).margin(1e-14));
    for (int j = 2; j <= p; ++j) CHECK(v[j] == Approx(0.0).margin(1e-13));
    h1_point(p, 1.0, v.data(), d.data());
    CHECK(v[0] == Approx(0.0).margin(1e-14));
    CHECK(v[1] == Approx(1.0));
    for (int j = 2; j <= p; ++j) CHECK(v[j] == Approx(0.0).margin(1e-13));
}

TEST_CASE("tabulated derivatives match finite differences") {
    int p = 4;
    QuadratureRule r = gauss_rule(6);
    for (auto family : {BasisFamily::l2, BasisFamily::h1}) {
        Basis b = tabulate(family, p, r);
        double h = 1e-6;
        for (int q = 0; q < r.size(); ++q) {
            double x = r.pts[q];
            std::vector<double> vp(p + 2), vm(p + 2), dd(p + 2);
            if (family == BasisFamily::h1) {
                h1_point(p, x + h, vp.data(), dd.data());
                h1_point(p, x - h, vm.data(), dd.data());
            } else {
                l2_point(p, x + h, vp.data());
                l2_point(p, x - h, vm.data());
            }
            for (int i = 0; i <= p; ++i)
                CHECK(b.der(i, q) == Approx((vp[i] - vm[i]) / (2 * h)).margin(1e-5));
        }
    }
}

TEST_CASE("point evaluation agrees with tabulation") {
    int p = 5;
    QuadratureRule r = gauss_rule(7);
    Basis bl = tabulate(BasisFamily::l2, p, r);
    Basis bh = tabulate(BasisFamily::h1, p, r);
    std::vector<double> v(p + 1), d(p + 1);
    for (int q = 0; q < r.size(); ++q) {
        l2_point(p, r.pts[q], v.data());
        for (int i = 0; i <= p; ++i) CHECK(v[i] == Approx(bl.val(i, q)).margin(1e-14));
        h1_point(p, r.pts[q], v.data(), d.data());
        for (int i = 0; i <= p; ++i) {
            CHECK(v[i] == Approx(bh.val(i, q)).margin(1e-14));
            CHECK(d[i] == Approx(bh.der(i, q)).margin(1e-13));
        }
    }
}

TEST_CASE("legendre_eval reconstructs expansions") {
    Eigen::VectorXd c(4);
    c << 1.0, -0.5, 2.0, 0.25;
    // P_0..P_3 at x = 0.3: 1, 0.3, (3x^2-1)/2, (5x^3-3x)/2
    double x = 0.3;
    double expect = 1.0 - 0.5 * x + 2.0 * (1.5 * x * x - 0.5) + 0.25 * (2.5 * x * x * x - 1.5 * x);
    CHECK(legendre_eval(c, x) == Approx(expect).epsilon(1e-14));
}

TEST_CASE("invalid basis requests throw") {
    QuadratureRule r = gauss_rule(3);
    CHECK_THROWS(tabulate(BasisFamily::h1, 0, r));
    CHECK_THROWS(gauss_rule(0));
    CHECK_THROWS(quadrature_rule(-1));
}
