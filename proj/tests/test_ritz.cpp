#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "roughsmile/ritz.hpp"

using namespace roughsmile;

namespace {

RBergomiParams fig1() {
    RBergomiParams p;
    p.sigma0 = 0.2;
    p.eta = 1.5;
    p.rho = -0.7;
    p.H = 0.3;
    p.theta = 1.0;
    return p;
}

BasisSpec haar(int n) {
    BasisSpec b;
    b.kind = BasisKind::Haar;
    b.n = n;
    return b;
}

BasisSpec fourier(int n) {
    BasisSpec b;
    b.kind = BasisKind::Fourier;
    b.n = n;
    return b;
}

}  // namespace

TEST_CASE("x=0 gives the zero path and zero rate") {
    const RBergomiParams p = fig1();
    const RitzSolution sol = rate_function(0.0, make_rbergomi(p),
                                           KernelSpec::riemann_liouville(p.H), haar(8),
                                           p.rho);
    CHECK(sol.lambda == 0.0);
    CHECK(sol.coeffs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.converged);
}

TEST_CASE("constant vol has the quadratic rate function") {
    RBergomiParams p = fig1();
    p.eta = 0.0;
    const KernelSpec kernel = KernelSpec::riemann_liouville(p.H);
    const VolModel model = make_rbergomi(p);
    for (double rho : {-0.9, 0.0, 0.9}) {
        RitzWorkspace ws(model, kernel, haar(8), rho);
        for (double x : {-0.2, -0.05, 0.05, 0.2}) {
            const RitzSolution sol = rate_function(x, ws);
            CHECK(sol.converged);
            const double expected = x * x / (2.0 * p.sigma0 * p.sigma0);
            CHECK(std::fabs(sol.lambda - expected) <= 1e-8);
            CHECK(sigma_level(sol) == doctest::Approx(p.sigma0).epsilon(1e-7));
        }
    }
}

TEST_CASE("rate function is positive off the origin and h(0)=0") {
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(8),
                     p.rho);
    for (double x : {-0.3, -0.1, 0.1, 0.3}) {
        const RitzSolution sol = rate_function(x, ws);
        CHECK(sol.lambda > 0.0);
        CHECK(sol.h(0.0) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(sol.converged);
        CHECK(sol.grad_norm <= 1e-9);
    }
}

TEST_CASE("stored lambda equals the objective identity at the coefficients") {
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(16),
                     p.rho);
    const double x = 0.15;
    const RitzSolution sol = rate_function(x, ws);
    const double rho_bar2 = 1.0 - p.rho * p.rho;
    const double u = x - p.rho * sol.G_val;
    const double direct =
        u * u / (2.0 * rho_bar2 * sol.F_val) + 0.5 * sol.coeffs.squaredNorm();
    CHECK(sol.lambda == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("two-path energy of the reconstructed minimizer equals lambda") {
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(8),
                     p.rho);
    for (double x : {-0.2, 0.1}) {
        const RitzSolution sol = rate_function(x, ws);
        CHECK(std::fabs(sol.energy() - sol.lambda) <= 1e-9);
    }
}

TEST_CASE("Ritz minimum is non-increasing in nested bases") {
    const RBergomiParams p = fig1();
    const VolModel model = make_rbergomi(p);
    const KernelSpec kernel = KernelSpec::riemann_liouville(p.H);
    const double x = 0.2;
    SUBCASE("haar") {
        double prev = 1e100;
        for (int n : {1, 2, 4, 8, 16}) {
            const double lam = rate_function(x, model, kernel, haar(n), p.rho).lambda;
            CHECK(lam <= prev + 1e-9);
            prev = lam;
        }
    }
    SUBCASE("fourier") {
        double prev = 1e100;
        for (int n : {1, 3, 5, 9, 17}) {
            const double lam = rate_function(x, model, kernel, fourier(n), p.rho).lambda;
            CHECK(lam <= prev + 1e-9);
            prev = lam;
        }
    }
}

TEST_CASE("sigma level approaches sigma0 for small x") {
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(8),
                     p.rho);
    const RitzSolution sol = rate_function(1e-3, ws);
    CHECK(sigma_level(sol) == doctest::Approx(p.sigma0).epsilon(2e-3));
}

TEST_CASE("rate derivative against finite differences") {
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(8),
                     p.rho);
    const double x = 0.1, dx = 1e-3;
    const RitzSolution sol = rate_function(x, ws);
    const double fd = (rate_function(x + dx, ws).lambda -
                       rate_function(x - dx, ws).lambda) /
                      (2.0 * dx);
    // sigma_x^2 from the identity itself; the check is against the FD slope
    const double sigma_x_sq = 2.0 * sol.lambda / (fd * fd);
    const double lp = rate_derivative(sol, sigma_x_sq);
    CHECK(std::fabs(lp - fd) / std::fabs(fd) <= 1e-2);
}

TEST_CASE("small-x rate derivative expansion for rBergomi") {
    // Lambda'(x) ~ x/sigma0^2 - 3x^2 rho sigma0' <K1,1> / sigma0^4
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(32),
                     p.rho);
    const double x = 0.02, dx = 2e-4;
    const double fd = (rate_function(x + dx, ws).lambda -
                       rate_function(x - dx, ws).lambda) /
                      (2.0 * dx);
    const double k11 = std::sqrt(2.0 * p.H) / ((p.H + 0.5) * (p.H + 1.5));
    const double s0 = p.sigma0, sp = p.sigma0 * p.eta / 2.0;
    const double pred = x / (s0 * s0) - 3.0 * x * x * p.rho * sp * k11 / std::pow(s0, 4);
    CHECK(fd == doctest::Approx(pred).epsilon(2e-2));
}

TEST_CASE("wing cap and sigma_level guards") {
    const RBergomiParams p = fig1();
    RitzWorkspace ws(make_rbergomi(p), KernelSpec::riemann_liouville(p.H), haar(4),
                     p.rho);
    CHECK_THROWS_AS(rate_function(3.0, ws), std::domain_error);
    const RitzSolution at_zero = rate_function(0.0, ws);
    CHECK_THROWS_AS(sigma_level(at_zero), std::domain_error);
    CHECK_THROWS_AS(rate_derivative(at_zero, 0.04), std::domain_error);
}
