#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "roughsmile/kernels.hpp"
#include "roughsmile/quadrature.hpp"

using namespace roughsmile;

TEST_CASE("closed forms at H=1/2 are the elementary values") {
    const KFunctionals kf = kfunc_closed_form(0.5);
    CHECK(kf.k1_1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(kf.k2_1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(kf.k1sq_1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(kf.kbar1sq_1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(kf.k1_kbar1 == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("closed-form k2_1 equals 1/(2H+1) for any H") {
    for (double H : {0.05, 0.1, 0.25, 0.4, 0.5}) {
        CHECK(kfunc_closed_form(H).k2_1 ==
              doctest::Approx(1.0 / (2.0 * H + 1.0)).epsilon(1e-14));
    }
}

TEST_CASE("closed form rejects H outside (0,1/2]") {
    CHECK_THROWS_AS(kfunc_closed_form(0.0), std::domain_error);
    CHECK_THROWS_AS(kfunc_closed_form(-0.1), std::domain_error);
    CHECK_THROWS_AS(kfunc_closed_form(0.6), std::domain_error);
}

TEST_CASE("quadrature matches closed forms") {
    for (double H : {0.1, 0.3, 0.5}) {
        const KernelSpec kernel = KernelSpec::riemann_liouville(H);
        const KFunctionals cf = kfunc_closed_form(H);
        const KFunctionalsQuad q = kfunc_quadrature(kernel, 1e-10);
        CHECK(q.converged);
        CHECK(std::fabs(q.values.k1_1 - cf.k1_1) <= 1e-8);
        CHECK(std::fabs(q.values.k2_1 - cf.k2_1) <= 1e-8);
        CHECK(std::fabs(q.values.k1sq_1 - cf.k1sq_1) <= 1e-8);
        CHECK(std::fabs(q.values.kbar1sq_1 - cf.kbar1sq_1) <= 1e-8);
        CHECK(std::fabs(q.values.k1_kbar1 - cf.k1_kbar1) <= 1e-8);
    }
}

TEST_CASE("quadrature at H=1/2 reproduces the elementary values to 1e-12") {
    const KernelSpec kernel = KernelSpec::riemann_liouville(0.5);
    const KFunctionals v = kfunc_quadrature(kernel, 1e-13).values;
    CHECK(v.k1_1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v.k2_1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v.k1sq_1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(v.kbar1sq_1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(v.k1_kbar1 == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("tabulated kernel with constant shape equals Riemann-Liouville") {
    const double H = 0.2;
    const double amp = std::sqrt(2.0 * H);
    const KernelSpec rl = KernelSpec::riemann_liouville(H);
    const KernelSpec tab = KernelSpec::tabulated(H, [&](double) { return amp; });
    const KFunctionalsQuad a = kfunc_quadrature(rl, 1e-10);
    const KFunctionalsQuad b = kfunc_quadrature(tab, 1e-10);
    CHECK(std::fabs(a.values.k1_1 - b.values.k1_1) <= 1e-8);
    CHECK(std::fabs(a.values.k2_1 - b.values.k2_1) <= 1e-8);
    CHECK(std::fabs(a.values.k1sq_1 - b.values.k1sq_1) <= 1e-8);
    CHECK(std::fabs(a.values.kbar1sq_1 - b.values.kbar1sq_1) <= 1e-8);
    CHECK(std::fabs(a.values.k1_kbar1 - b.values.k1_kbar1) <= 1e-8);
}

TEST_CASE("kernel evaluation: RL value, causality, scaling") {
    const double H = 0.3;
    const KernelSpec kernel = KernelSpec::riemann_liouville(H);
    CHECK(kernel(0.5, 0.7) == 0.0);
    CHECK(kernel(0.7, 0.5) ==
          doctest::Approx(std::sqrt(0.6) * std::pow(0.2, H - 0.5)).epsilon(1e-14));
    for (double lam : {0.5, 2.0}) {
        for (double t : {0.3, 0.6, 0.9}) {
            for (double s : {0.1, 0.25, 0.55}) {
                if (s >= t) continue;
                CHECK(std::fabs(kernel(lam * t, lam * s) -
                                std::pow(lam, H - 0.5) * kernel(t, s)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("convolution of constants and indicators") {
    SUBCASE("f=1 under RL gives the power law") {
        for (double H : {0.1, 0.3, 0.5}) {
            const KernelSpec kernel = KernelSpec::riemann_liouville(H);
            for (double t : {0.25, 0.5, 1.0}) {
                const double expected =
                    std::sqrt(2.0 * H) / (H + 0.5) * std::pow(t, H + 0.5);
                CHECK(convolve(kernel, [](double) { return 1.0; }, t) ==
                      doctest::Approx(expected).epsilon(1e-10));
                CHECK(kernel.k1(t) == doctest::Approx(expected).epsilon(1e-12));
                CHECK(convolve_indicator(kernel, 0.0, 1.0, t) ==
                      doctest::Approx(expected).epsilon(1e-13));
            }
        }
    }
    SUBCASE("full indicator at H=1/2, t=1 gives 1") {
        const KernelSpec kernel = KernelSpec::riemann_liouville(0.5);
        CHECK(convolve_indicator(kernel, 0.0, 1.0, 1.0) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("Haar-style step matches direct quadrature") {
        const KernelSpec kernel = KernelSpec::riemann_liouville(0.3);
        const double exact = convolve_indicator(kernel, 0.0, 0.5, 1.0) -
                             convolve_indicator(kernel, 0.5, 1.0, 1.0);
        auto f = [](double s) { return s < 0.5 ? 1.0 : -1.0; };
        CHECK(convolve(kernel, f, 1.0) == doctest::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("adjoint kernel integral") {
    CHECK(adjoint_k1(KernelSpec::riemann_liouville(0.5), 0.25) ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(adjoint_k1(KernelSpec::riemann_liouville(0.3), 0.0) ==
          doctest::Approx(std::sqrt(0.6) / 0.8).epsilon(1e-10));
    CHECK(adjoint_k1(KernelSpec::riemann_liouville(0.3), 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Fubini identity <Kbar1,1> = <K1,1> by quadrature") {
    for (double H : {0.1, 0.3, 0.5}) {
        const KernelSpec kernel = KernelSpec::riemann_liouville(H);
        const double lhs = adjoint_k1_mean_quadrature(kernel, 1e-11);
        const double rhs = kfunc_quadrature(kernel, 1e-11).values.k1_1;
        CHECK(std::fabs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("functionals are continuous in H on a grid") {
    const int n = 40;
    KFunctionals prev = kfunc_closed_form(0.02);
    for (int i = 1; i <= n; ++i) {
        const double H = 0.02 + (0.5 - 0.02) * i / n;
        const KFunctionals cur = kfunc_closed_form(H);
        CHECK(std::fabs(cur.k1_1 - prev.k1_1) < 0.1);
        CHECK(std::fabs(cur.k2_1 - prev.k2_1) < 0.1);
        CHECK(std::fabs(cur.k1sq_1 - prev.k1sq_1) < 0.1);
        CHECK(std::fabs(cur.kbar1sq_1 - prev.kbar1sq_1) < 0.1);
        CHECK(std::fabs(cur.k1_kbar1 - prev.k1_kbar1) < 0.1);
        prev = cur;
    }
}

TEST_CASE("kernel file round trip") {
    const double H = 0.25;
    const std::string path = "kernel_roundtrip.txt";
    {
        std::ofstream out(path);
        out.precision(17);  // keep the round trip lossless
        out << "# fK H=" << H << "\n";
        const double amp = std::sqrt(2.0 * H);
        for (int i = 0; i <= 32; ++i) {
            const double r = static_cast<double>(i) / 32;
            out << r << " " << amp * (1.0 + 0.1 * r) << "\n";
        }
    }
    const KernelSpec kernel = KernelSpec::from_file(path);
    CHECK(kernel.hurst() == doctest::Approx(H));
    CHECK(kernel.kind() == KernelKind::TabulatedSelfSimilar);
    const double amp = std::sqrt(2.0 * H);
    CHECK(kernel.shape(0.5) == doctest::Approx(amp * 1.05).epsilon(1e-8));
    CHECK(kernel(1.0, 0.5) ==
          doctest::Approx(std::pow(0.5, H - 0.5) * amp * 1.05).epsilon(1e-8));
}

TEST_CASE("adaptive quadrature sanity") {
    auto res = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12);
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(2.0).epsilon(1e-12));
    // integrable singularity
    auto s = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 1e-12, 1.0,
                                1e-9);
    CHECK(s.value == doctest::Approx(2.0).epsilon(1e-5));
}
