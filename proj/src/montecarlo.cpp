#include "roughsmile/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "roughsmile/bs.hpp"
#include "roughsmile/quadrature.hpp"
#include "roughsmile/rng.hpp"

namespace roughsmile {

namespace {

constexpr long kBlockPaths = 4096;

struct Kahan {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

void parallel_blocks(long n_items, long block,
                     const std::function<void(long, long)>& body) {
    const long n_blocks = (n_items + block - 1) / block;
    const int workers = std::min<long>(worker_count(), n_blocks);
    if (workers <= 1) {
        for (long b = 0; b < n_blocks; ++b)
            body(b * block, std::min(n_items, (b + 1) * block));
        return;
    }
    std::atomic<long> next{0};
    auto run = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= n_blocks) return;
            body(b * block, std::min(n_items, (b + 1) * block));
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
}

// Cov(What_ti, What_tj) = 2H int_0^{min} (ti-u)^a (tj-u)^a du, a = H-1/2.
// Substituting w = (ti-u)^p with p = H+1/2 removes the singularity:
// (2H/p) int_0^{ti^p} (tj-ti+w^{1/p})^a dw  (for ti <= tj).
double volterra_cov(double ti, double tj, double H) {
    if (ti > tj) std::swap(ti, tj);
    if (ti == tj) return std::pow(ti, 2.0 * H);
    const double a = H - 0.5, p = H + 0.5;
    const double gap = tj - ti;
    auto f = [&](double w) { return std::pow(gap + std::pow(w, 1.0 / p), a); };
    const auto q = integrate_adaptive(f, 0.0, std::pow(ti, p), 1e-13);
    return 2.0 * H / p * q.value;
}

// Cov(What_t, W_s) = sqrt(2H)/p [t^p - (t - min(s,t))^p].
double cross_cov(double t, double s, double H) {
    const double p = H + 0.5;
    return std::sqrt(2.0 * H) / p *
           (std::pow(t, p) - std::pow(t - std::min(s, t), p));
}

Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd cov) {
    const double scale = cov.diagonal().maxCoeff();
    double jitter = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) return llt.matrixL();
        jitter = (jitter == 0.0) ? 1e-12 * scale : 10.0 * jitter;
        cov.diagonal().array() += jitter;
        if (jitter > 1e-6 * scale) break;
    }
    throw std::runtime_error("simulate: covariance not positive definite after jitter");
}

struct GridSetup {
    int m = 0;
    double dt = 0.0;
    std::vector<double> t;                 // grid times t_1..t_m
    std::vector<double> y;                 // t_j^{2H}
    std::vector<std::pair<int, int>> rec;  // (grid index 1-based, maturity slot)
};

GridSetup make_grid(const MCConfig& cfg, double H, PathBundle& bundle) {
    GridSetup gs;
    gs.m = cfg.n_steps;
    const double t_max = *std::max_element(cfg.maturities.begin(), cfg.maturities.end());
    gs.dt = t_max / gs.m;
    gs.t.resize(gs.m);
    gs.y.resize(gs.m);
    for (int j = 0; j < gs.m; ++j) {
        gs.t[j] = (j + 1) * gs.dt;
        gs.y[j] = std::pow(gs.t[j], 2.0 * H);
    }
    bundle.requested = cfg.maturities;
    bundle.maturities.resize(cfg.maturities.size());
    for (std::size_t i = 0; i < cfg.maturities.size(); ++i) {
        int idx = static_cast<int>(std::lround(cfg.maturities[i] / gs.dt));
        idx = std::clamp(idx, 1, gs.m);
        bundle.maturities[i] = idx * gs.dt;
        gs.rec.emplace_back(idx, static_cast<int>(i));
    }
    std::sort(gs.rec.begin(), gs.rec.end());
    return gs;
}

// Walk one path given its Gaussian pieces; record terminal values.
void walk_path(const GridSetup& gs, const VolModel& model, double rho,
               const double* what, const double* dw, const double* dwbar,
               PathBundle& bundle, long path) {
    const double rho_bar = std::sqrt(1.0 - rho * rho);
    double sig = model.sigma(0.0, 0.0);
    double x = 0.0, w = 0.0;
    std::size_t r = 0;
    for (int j = 0; j < gs.m; ++j) {
        const double dwt = rho * dw[j] + rho_bar * dwbar[j];
        x += sig * dwt - 0.5 * sig * sig * gs.dt;
        w += dw[j];
        while (r < gs.rec.size() && gs.rec[r].first == j + 1) {
            const int slot = gs.rec[r].second;
            bundle.X[slot][path] = x;
            bundle.W_hat[slot][path] = what[j];
            bundle.W[slot][path] = w;
            ++r;
        }
        sig = model.sigma(what[j], gs.y[j]);
    }
}

void simulate_covariance_exact(const RBergomiParams& params, const MCConfig& cfg,
                               const GridSetup& gs, const VolModel& model,
                               PathBundle& bundle) {
    const int m = gs.m;
    Eigen::MatrixXd cov(2 * m, 2 * m);
    parallel_blocks(m, 8, [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            for (int j = 0; j <= i; ++j) {
                cov(i, j) = cov(j, i) = volterra_cov(gs.t[i], gs.t[j], params.H);
            }
            for (int j = 0; j < m; ++j) {
                const double prev = (j == 0) ? 0.0 : gs.t[j - 1];
                cov(i, m + j) = cov(m + j, i) =
                    cross_cov(gs.t[i], gs.t[j], params.H) -
                    cross_cov(gs.t[i], prev, params.H);
            }
        }
    });
    cov.bottomRightCorner(m, m) = gs.dt * Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd L = cholesky_with_jitter(cov);

    const double sqrt_dt = std::sqrt(gs.dt);
    parallel_blocks(bundle.n_paths, kBlockPaths, [&](long lo, long hi) {
        const long nb = hi - lo;
        Eigen::MatrixXd xi(2 * m, nb), omega(m, nb);
        for (long p = 0; p < nb; ++p) {
            const long g = lo + p;
            const double sign = (cfg.antithetic && (g & 1)) ? -1.0 : 1.0;
            PhiloxRng rng(cfg.seed, cfg.antithetic ? g / 2 : g);
            for (int j = 0; j < 2 * m; ++j) xi(j, p) = sign * rng.next_normal();
            for (int j = 0; j < m; ++j) omega(j, p) = sign * sqrt_dt * rng.next_normal();
        }
        const Eigen::MatrixXd z = L * xi;
        for (long p = 0; p < nb; ++p) {
            walk_path(gs, model, params.rho, z.col(p).data(), z.col(p).data() + m,
                      omega.col(p).data(), bundle, lo + p);
        }
    });
}

void simulate_hybrid(const RBergomiParams& params, const MCConfig& cfg,
                     const GridSetup& gs, const VolModel& model, PathBundle& bundle) {
    const int m = gs.m;
    const double H = params.H;
    const double a = H - 0.5;
    const double dt = gs.dt;

    // exact joint draw on the most recent interval:
    // Var(W1) = dt^{2a+1}/(2a+1), Cov(dW, W1) = dt^{a+1}/(a+1)
    const double var_w1 = std::pow(dt, 2.0 * a + 1.0) / (2.0 * a + 1.0);
    const double cov_w1 = std::pow(dt, a + 1.0) / (a + 1.0);
    const double sqrt_dt = std::sqrt(dt);
    const double c21 = cov_w1 / sqrt_dt;
    const double c22 = std::sqrt(std::max(var_w1 - c21 * c21, 0.0));

    // lagged weights (b_k dt)^a with b_k = ((k^{a+1}-(k-1)^{a+1})/(a+1))^{1/a}
    Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j + 1 < i + 1; ++j) {
            if (a == 0.0) {  // H = 1/2: flat kernel, unit weights
                conv(i, j) = 1.0;
                continue;
            }
            const int k = i - j + 1;  // lag >= 2
            const double bk = std::pow(
                (std::pow(k, a + 1.0) - std::pow(k - 1.0, a + 1.0)) / (a + 1.0),
                1.0 / a);
            conv(i, j) = std::pow(bk * dt, a);
        }
    }
    const double sqrt_2h = std::sqrt(2.0 * H);

    parallel_blocks(bundle.n_paths, kBlockPaths, [&](long lo, long hi) {
        const long nb = hi - lo;
        Eigen::MatrixXd g(nb, m), w1(nb, m), omega(nb, m);
        for (long p = 0; p < nb; ++p) {
            const long gl = lo + p;
            const double sign = (cfg.antithetic && (gl & 1)) ? -1.0 : 1.0;
            PhiloxRng rng(cfg.seed, cfg.antithetic ? gl / 2 : gl);
            for (int j = 0; j < m; ++j) {
                const double x1 = sign * rng.next_normal();
                const double x2 = sign * rng.next_normal();
                const double x3 = sign * rng.next_normal();
                g(p, j) = sqrt_dt * x1;
                w1(p, j) = c21 * x1 + c22 * x2;
                omega(p, j) = sqrt_dt * x3;
            }
        }
        const Eigen::MatrixXd what = sqrt_2h * (w1 + g * conv.transpose());
        Eigen::VectorXd what_row(m), dw_row(m), dwbar_row(m);
        for (long p = 0; p < nb; ++p) {
            what_row = what.row(p);
            dw_row = g.row(p);
            dwbar_row = omega.row(p);
            walk_path(gs, model, params.rho, what_row.data(), dw_row.data(),
                      dwbar_row.data(), bundle, lo + p);
        }
    });
}

}  // namespace

int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("ROUGHSMILE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

MCScheme parse_scheme(const std::string& name) {
    if (name == "covariance-exact" || name == "covariance" || name == "exact")
        return MCScheme::CovarianceExact;
    if (name == "hybrid" || name == "hybrid-style") return MCScheme::HybridStyle;
    throw std::invalid_argument("unknown scheme: " + name);
}

std::string scheme_name(MCScheme scheme) {
    return scheme == MCScheme::CovarianceExact ? "covariance-exact" : "hybrid";
}

void MCConfig::validate() const {
    if (n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
    if (antithetic && (n_paths % 2) != 0)
        throw std::invalid_argument("antithetic sampling needs an even path count");
    if (n_steps < 8) throw std::invalid_argument("n_steps must be >= 8");
    if (maturities.empty()) throw std::invalid_argument("no maturities given");
    for (double t : maturities)
        if (!(t > 0.0)) throw std::invalid_argument("maturities must be > 0");
}

PathBundle simulate(const RBergomiParams& params, const MCConfig& cfg) {
    params.validate();
    cfg.validate();

    PathBundle bundle;
    bundle.n_paths = cfg.n_paths;
    bundle.antithetic = cfg.antithetic;
    bundle.scheme = cfg.scheme;
    bundle.seed = cfg.seed;
    bundle.H = params.H;
    const GridSetup gs = make_grid(cfg, params.H, bundle);

    const std::size_t n_mat = cfg.maturities.size();
    bundle.X.assign(n_mat, Eigen::VectorXd(cfg.n_paths));
    bundle.W_hat.assign(n_mat, Eigen::VectorXd(cfg.n_paths));
    bundle.W.assign(n_mat, Eigen::VectorXd(cfg.n_paths));

    const VolModel model = make_rbergomi(params);
    if (cfg.scheme == MCScheme::CovarianceExact)
        simulate_covariance_exact(params, cfg, gs, model, bundle);
    else
        simulate_hybrid(params, cfg, gs, model, bundle);
    return bundle;
}

MeanSE mean_se(const Eigen::VectorXd& values, bool antithetic) {
    const long n = values.size();
    const long samples = antithetic ? n / 2 : n;
    if (samples < 2) throw std::invalid_argument("mean_se: need at least 2 samples");
    Kahan sum;
    for (long i = 0; i < samples; ++i)
        sum.add(antithetic ? 0.5 * (values[2 * i] + values[2 * i + 1]) : values[i]);
    const double mean = sum.sum / samples;
    Kahan sq;
    for (long i = 0; i < samples; ++i) {
        const double v =
            (antithetic ? 0.5 * (values[2 * i] + values[2 * i + 1]) : values[i]) - mean;
        sq.add(v * v);
    }
    MeanSE r;
    r.mean = mean;
    r.se = std::sqrt(sq.sum / (samples - 1.0) / samples);
    return r;
}

std::vector<PriceRow> price_options(const PathBundle& bundle,
                                    const std::vector<double>& strikes) {
    std::vector<PriceRow> rows;
    Eigen::VectorXd payoff(bundle.n_paths);
    for (std::size_t mi = 0; mi < bundle.maturities.size(); ++mi) {
        const Eigen::VectorXd s = bundle.X[mi].array().exp();
        for (double k : strikes) {
            const double strike = std::exp(k);
            PriceRow row;
            row.t = bundle.maturities[mi];
            row.k = k;
            payoff = (s.array() - strike).cwiseMax(0.0);
            const MeanSE call = mean_se(payoff, bundle.antithetic);
            payoff = (strike - s.array()).cwiseMax(0.0);
            const MeanSE put = mean_se(payoff, bundle.antithetic);
            row.call = call.mean;
            row.call_se = call.se;
            row.put = put.mean;
            row.put_se = put.se;
            // invert the out-of-the-money side
            const bool use_call = k >= 0.0;
            try {
                row.ivol = implied_vol(use_call ? row.call : row.put, row.t, k, use_call);
                const double vega = bs_vega(row.ivol, row.t, k);
                row.ivol_se = (vega > 0.0) ? (use_call ? row.call_se : row.put_se) / vega
                                           : 0.0;
                row.ivol_ok = true;
            } catch (const std::exception&) {
                row.ivol = 0.0;
                row.ivol_se = 0.0;
                row.ivol_ok = false;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_price_csv(const std::string& path, const std::vector<PriceRow>& rows,
                     const PathBundle& bundle,
                     const std::vector<std::pair<std::string, std::string>>& header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& [key, value] : header) out << "# " << key << "=" << value << "\n";
    out << "# scheme=" << scheme_name(bundle.scheme) << "\n";
    out << "# seed=" << bundle.seed << "\n";
    out << "t,k,x,call,call_se,put,put_se,ivol,ivol_se,scheme,seed\n";
    for (const auto& r : rows) {
        const double x = r.k / std::pow(r.t, 0.5 - bundle.H);
        out << fmt(r.t) << "," << fmt(r.k) << "," << fmt(x) << "," << fmt(r.call) << ","
            << fmt(r.call_se) << "," << fmt(r.put) << "," << fmt(r.put_se) << ","
            << (r.ivol_ok ? fmt(r.ivol) : std::string()) << ","
            << (r.ivol_ok ? fmt(r.ivol_se) : std::string()) << ","
            << scheme_name(bundle.scheme) << "," << bundle.seed << "\n";
    }
}

}  // namespace roughsmile
