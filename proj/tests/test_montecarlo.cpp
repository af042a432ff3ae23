#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "roughsmile/bs.hpp"
#include "roughsmile/montecarlo.hpp"

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

MeanSE sample_var_se(const Eigen::VectorXd& v) {
    const double m = v.mean();
    Eigen::VectorXd sq = (v.array() - m).square();
    return mean_se(sq);
}

MeanSE sample_cov_se(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd prod = (a.array() - a.mean()) * (b.array() - b.mean());
    return mean_se(prod);
}

}  // namespace

TEST_CASE("constant vol H=1/2 reduces to Black-Scholes") {
    RBergomiParams p;
    p.sigma0 = 0.2;
    p.eta = 0.0;
    p.rho = -0.5;
    p.H = 0.5;
    MCConfig cfg;
    cfg.n_paths = 100000;
    cfg.n_steps = 32;
    cfg.seed = 11;
    cfg.maturities = {0.25};
    const PathBundle bundle = simulate(p, cfg);

    const MeanSE mx = mean_se(bundle.X[0], cfg.antithetic);
    const double t = bundle.maturities[0];
    // antithetic pairs cancel the Gaussian part exactly, so allow rounding noise
    CHECK(std::fabs(mx.mean - (-0.5 * p.sigma0 * p.sigma0 * t)) <=
          4.0 * mx.se + 1e-14);
    const MeanSE vx = sample_var_se(bundle.X[0]);
    CHECK(std::fabs(vx.mean - p.sigma0 * p.sigma0 * t) <= 4.0 * vx.se);

    const std::vector<double> strikes = {-0.1, 0.0, 0.1};
    const auto rows = price_options(bundle, strikes);
    for (const auto& r : rows) {
        const double exact = bs_price(p.sigma0, r.t, r.k, true);
        CHECK(std::fabs(r.call - exact) <= 4.0 * r.call_se);
        CHECK(r.ivol_ok);
    }
}

TEST_CASE("Volterra self-similarity and cross covariance") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 60000;
    cfg.n_steps = 50;
    cfg.seed = 5;
    cfg.maturities = {0.1, 0.2, 0.3, 0.4, 0.5};
    for (MCScheme scheme : {MCScheme::CovarianceExact, MCScheme::HybridStyle}) {
        cfg.scheme = scheme;
        CAPTURE(scheme_name(scheme));
        const PathBundle bundle = simulate(p, cfg);
        for (std::size_t mi = 0; mi < bundle.maturities.size(); ++mi) {
            const double t = bundle.maturities[mi];
            const MeanSE var = sample_var_se(bundle.W_hat[mi]);
            CHECK(std::fabs(var.mean - std::pow(t, 2.0 * p.H)) <= 4.0 * var.se);
            const MeanSE cov = sample_cov_se(bundle.W_hat[mi], bundle.W[mi]);
            const double expected = std::sqrt(2.0 * p.H) / (p.H + 0.5) *
                                    std::pow(t, p.H + 0.5);
            CHECK(std::fabs(cov.mean - expected) <= 4.0 * cov.se);
            const MeanSE w_var = sample_var_se(bundle.W[mi]);
            CHECK(std::fabs(w_var.mean - t) <= 4.0 * w_var.se);
        }
    }
}

TEST_CASE("martingale mean and put-call parity") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 100000;
    cfg.n_steps = 64;
    cfg.seed = 17;
    cfg.maturities = {0.1};
    const PathBundle bundle = simulate(p, cfg);
    const Eigen::VectorXd s = bundle.X[0].array().exp();
    const MeanSE ms = mean_se(s, cfg.antithetic);
    CHECK(std::fabs(ms.mean - 1.0) <= 4.0 * ms.se);

    const auto rows = price_options(bundle, {-0.05, 0.0, 0.08});
    for (const auto& r : rows) {
        const double se = std::hypot(r.call_se, r.put_se);
        CHECK(std::fabs((r.call - r.put) - (1.0 - std::exp(r.k))) <= 4.0 * se);
    }
}

TEST_CASE("deep in-the-money call prices the forward") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 16;
    cfg.seed = 3;
    cfg.maturities = {0.1};
    const auto rows = price_options(simulate(p, cfg), {-10.0});
    CHECK(std::fabs(rows[0].call - 1.0) <= 2.0 * std::max(rows[0].call_se, 1e-8) + 5e-5);
}

TEST_CASE("seed determinism is bit exact and thread independent") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 4000;
    cfg.n_steps = 32;
    cfg.seed = 99;
    cfg.maturities = {0.1, 0.3};
    for (MCScheme scheme : {MCScheme::CovarianceExact, MCScheme::HybridStyle}) {
        cfg.scheme = scheme;
        setenv("ROUGHSMILE_THREADS", "1", 1);
        const PathBundle a = simulate(p, cfg);
        setenv("ROUGHSMILE_THREADS", "4", 1);
        const PathBundle b = simulate(p, cfg);
        unsetenv("ROUGHSMILE_THREADS");
        const PathBundle c = simulate(p, cfg);
        for (std::size_t mi = 0; mi < a.maturities.size(); ++mi) {
            CHECK((a.X[mi] - b.X[mi]).cwiseAbs().maxCoeff() == 0.0);
            CHECK((a.X[mi] - c.X[mi]).cwiseAbs().maxCoeff() == 0.0);
            CHECK((a.W_hat[mi] - b.W_hat[mi]).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("theta damping changes the vol path deterministically") {
    RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 2000;
    cfg.n_steps = 16;
    cfg.seed = 123;
    cfg.maturities = {0.2};
    p.theta = 1.0;
    const PathBundle damped = simulate(p, cfg);
    p.theta = 0.0;
    const PathBundle undamped = simulate(p, cfg);
    // identical Gaussian draws, so the Volterra paths coincide bit-exactly
    CHECK((damped.W_hat[0] - undamped.W_hat[0]).cwiseAbs().maxCoeff() == 0.0);
    // and the variance factor is the deterministic damping
    const VolModel m1 = make_rbergomi([&] { RBergomiParams q = fig1(); q.theta = 1.0; return q; }());
    const VolModel m0 = make_rbergomi([&] { RBergomiParams q = fig1(); q.theta = 0.0; return q; }());
    const double y = std::pow(0.13, 2.0 * p.H);
    CHECK(m1.sigma(0.4, y) / m0.sigma(0.4, y) ==
          doctest::Approx(std::exp(-p.eta * p.eta * y / 4.0)).epsilon(1e-12));
    // damping lowers realized variance, so X paths must differ
    CHECK((damped.X[0] - undamped.X[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("scheme agreement on implied vols") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 200000;
    cfg.n_steps = 64;
    cfg.seed = 42;
    cfg.maturities = {0.1};
    const std::vector<double> strikes = {-0.08, -0.04, 0.0, 0.04, 0.08};

    cfg.scheme = MCScheme::CovarianceExact;
    const auto a = price_options(simulate(p, cfg), strikes);
    cfg.scheme = MCScheme::HybridStyle;
    cfg.seed = 43;  // independent draws
    const auto b = price_options(simulate(p, cfg), strikes);
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        REQUIRE(a[i].ivol_ok);
        REQUIRE(b[i].ivol_ok);
        const double se = std::hypot(a[i].ivol_se, b[i].ivol_se);
        CHECK(std::fabs(a[i].ivol - b[i].ivol) <= 4.0 * se + 1e-4);
    }
}

TEST_CASE("antithetic pairing does not hurt the ATM standard error") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 100000;
    cfg.n_steps = 32;
    cfg.seed = 7;
    cfg.maturities = {0.1};
    cfg.antithetic = true;
    const auto with = price_options(simulate(p, cfg), {0.0});
    cfg.antithetic = false;
    const auto without = price_options(simulate(p, cfg), {0.0});
    CHECK(with[0].call_se <= without[0].call_se * 1.05);
}

TEST_CASE("call prices are convex in strike within error bands") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 100000;
    cfg.n_steps = 32;
    cfg.seed = 21;
    cfg.maturities = {0.1};
    std::vector<double> ks;
    for (int i = -5; i <= 5; ++i) ks.push_back(0.03 * i);
    const auto rows = price_options(simulate(p, cfg), ks);
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        const double k0 = std::exp(rows[i - 1].k), k1 = std::exp(rows[i].k),
                     k2 = std::exp(rows[i + 1].k);
        const double w = (k2 - k1) / (k2 - k0);
        const double interp = w * rows[i - 1].call + (1.0 - w) * rows[i + 1].call;
        const double se = std::sqrt(w * w * rows[i - 1].call_se * rows[i - 1].call_se +
                                    rows[i].call_se * rows[i].call_se +
                                    (1 - w) * (1 - w) * rows[i + 1].call_se *
                                        rows[i + 1].call_se);
        CHECK(rows[i].call <= interp + 4.0 * se);
    }
}

TEST_CASE("config validation") {
    MCConfig cfg;
    cfg.maturities = {0.1};
    cfg.n_paths = 1;
    CHECK_THROWS(cfg.validate());
    cfg.n_paths = 101;
    cfg.antithetic = true;
    CHECK_THROWS(cfg.validate());
    cfg.n_paths = 100;
    cfg.n_steps = 4;
    CHECK_THROWS(cfg.validate());
    cfg.n_steps = 16;
    CHECK_NOTHROW(cfg.validate());
    cfg.maturities = {};
    CHECK_THROWS(cfg.validate());
    CHECK_THROWS(parse_scheme("bogus"));
}

TEST_CASE("price table round trips through CSV") {
    const RBergomiParams p = fig1();
    MCConfig cfg;
    cfg.n_paths = 2000;
    cfg.n_steps = 16;
    cfg.seed = 2;
    cfg.maturities = {0.1};
    const PathBundle bundle = simulate(p, cfg);
    const auto rows = price_options(bundle, {-0.05, 0.0, 0.05});
    const std::string path = "mc_table_test.csv";
    write_price_csv(path, rows, bundle, {{"purpose", "test"}});

    std::ifstream in(path);
    std::string line;
    std::vector<std::string> data;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') data.push_back(line);
    }
    REQUIRE(data.size() == rows.size() + 1);  // header + rows
    CHECK(data[0] == "t,k,x,call,call_se,put,put_se,ivol,ivol_se,scheme,seed");
    // parse back the first data row and compare at full precision
    std::istringstream row(data[1]);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 11);
    CHECK(std::stod(cells[0]) == rows[0].t);
    CHECK(std::stod(cells[3]) == rows[0].call);
    CHECK(std::stod(cells[5]) == rows[0].put);
}
