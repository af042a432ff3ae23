#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roughsmile/bs.hpp"
#include "roughsmile/expansions.hpp"
#include "roughsmile/kernels.hpp"
#include "roughsmile/kl.hpp"
#include "roughsmile/montecarlo.hpp"
#include "roughsmile/ritz.hpp"
#include "roughsmile/volmodel.hpp"

namespace rs = roughsmile;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

// "a:b:n" -> n points from a to b inclusive
std::vector<double> parse_grid(const std::string& text) {
    double a = 0.0, b = 0.0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || !in.eof())
        throw CLI::ValidationError("grid", "expected a:b:n, got '" + text + "'");
    if (n < 1) throw CLI::ValidationError("grid", "grid needs at least one point");
    if (n > 1 && !(b > a)) throw CLI::ValidationError("grid", "grid needs b > a");
    std::vector<double> g(n);
    for (long i = 0; i < n; ++i)
        g[i] = (n == 1) ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    return g;
}

struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<std::string, std::string>> summary;  // trailing comments
};

void write_csv(const Table& t, std::ostream& out) {
    for (const auto& [k, v] : t.meta) out << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out << t.columns[i] << (i + 1 < t.columns.size() ? "," : "\n");
    for (const auto& row : t.rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
    for (const auto& [k, v] : t.summary) out << "# " << k << "=" << v << "\n";
}

void write_json(const Table& t, std::ostream& out) {
    auto quote = [](const std::string& s) { return "\"" + s + "\""; };
    auto cell = [&](const std::string& s) {
        return is_number(s) ? s : quote(s);
    };
    out << "{\n  \"meta\": {";
    for (std::size_t i = 0; i < t.meta.size(); ++i)
        out << (i ? ", " : "") << quote(t.meta[i].first) << ": "
            << quote(t.meta[i].second);
    out << "},\n  \"columns\": [";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out << (i ? ", " : "") << quote(t.columns[i]);
    out << "],\n  \"rows\": [\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        out << "    [";
        for (std::size_t i = 0; i < t.rows[r].size(); ++i)
            out << (i ? ", " : "") << cell(t.rows[r][i]);
        out << "]" << (r + 1 < t.rows.size() ? "," : "") << "\n";
    }
    out << "  ],\n  \"summary\": {";
    for (std::size_t i = 0; i < t.summary.size(); ++i)
        out << (i ? ", " : "") << quote(t.summary[i].first) << ": "
            << quote(t.summary[i].second);
    out << "}\n}\n";
}

void emit(const Table& t, const std::string& out_path, const std::string& format) {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open output file: " + out_path);
        out = &file;
    }
    if (format == "csv")
        write_csv(t, *out);
    else
        write_json(t, *out);
}

struct CommonOpts {
    std::string model_file;
    rs::RBergomiParams params;
    std::string basis = "haar";
    int n_basis = 8;
    int n_kl = 256;
    std::string x_grid, t_grid;
    double beta = 0.0;
    int order = 2;
    std::string scheme = "covariance-exact";
    long paths = 100000;
    int steps = 64;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";

    CLI::Option *o_sigma0 = nullptr, *o_eta = nullptr, *o_rho = nullptr,
                *o_H = nullptr, *o_theta = nullptr;

    void attach(CLI::App* app) {
        app->add_option("--model-file", model_file, "key=value model config file");
        o_sigma0 = app->add_option("--sigma0", params.sigma0, "spot volatility");
        o_eta = app->add_option("--eta", params.eta, "vol-of-vol");
        o_rho = app->add_option("--rho", params.rho, "spot/vol correlation");
        o_H = app->add_option("--H", params.H, "Hurst exponent");
        o_theta = app->add_option("--theta", params.theta, "variance damping in [0,1]");
        app->add_option("--basis", basis, "Ritz basis")
            ->check(CLI::IsMember({"fourier", "haar"}));
        app->add_option("--n-basis", n_basis, "Ritz basis size");
        app->add_option("--n-kl", n_kl, "KL truncation size");
        app->add_option("--x-grid", x_grid, "moneyness grid a:b:n");
        app->add_option("--t-grid", t_grid, "maturity grid a:b:n");
        app->add_option("--beta", beta, "moderate-deviation exponent");
        app->add_option("--order", order, "moderate-deviation order n");
        app->add_option("--scheme", scheme, "MC scheme")
            ->check(CLI::IsMember({"covariance-exact", "hybrid"}));
        app->add_option("--paths", paths, "MC path count");
        app->add_option("--steps", steps, "MC time steps");
        app->add_option("--seed", seed, "RNG seed");
        app->add_option("--out", out, "output file (default stdout)");
        app->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"csv", "json"}));
    }

    rs::RBergomiParams resolve_params() const {
        rs::RBergomiParams p = params;
        if (!model_file.empty()) {
            p = rs::load_rbergomi_config(model_file);
            if (o_sigma0->count()) p.sigma0 = params.sigma0;
            if (o_eta->count()) p.eta = params.eta;
            if (o_rho->count()) p.rho = params.rho;
            if (o_H->count()) p.H = params.H;
            if (o_theta->count()) p.theta = params.theta;
        }
        p.validate();
        return p;
    }

    rs::BasisSpec basis_spec() const {
        rs::BasisSpec b;
        b.kind = (basis == "fourier") ? rs::BasisKind::Fourier : rs::BasisKind::Haar;
        b.n = n_basis;
        b.validate();
        return b;
    }

    void stamp(Table& t, const rs::RBergomiParams& p) const {
        t.meta.emplace_back("sigma0", fmt17(p.sigma0));
        t.meta.emplace_back("eta", fmt17(p.eta));
        t.meta.emplace_back("rho", fmt17(p.rho));
        t.meta.emplace_back("H", fmt17(p.H));
        t.meta.emplace_back("theta", fmt17(p.theta));
        t.meta.emplace_back("basis", basis);
        t.meta.emplace_back("n_basis", std::to_string(n_basis));
        t.meta.emplace_back("n_kl", std::to_string(n_kl));
        t.meta.emplace_back("seed", std::to_string(seed));
    }
};

std::vector<double> required_grid(const std::string& text, const char* name) {
    if (text.empty())
        throw CLI::ValidationError(name, std::string("missing required ") + name);
    return parse_grid(text);
}

int cmd_kfunc(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto kernel = rs::KernelSpec::riemann_liouville(p.H);
    Table t;
    t.meta.emplace_back("H", fmt17(p.H));
    t.columns = {"source", "k1_1", "k2_1", "k1sq_1", "kbar1sq_1", "k1_kbar1",
                 "max_error"};
    const rs::KFunctionals cf = rs::kfunc_closed_form(p.H);
    t.rows.push_back({"closed-form", fmt17(cf.k1_1), fmt17(cf.k2_1), fmt17(cf.k1sq_1),
                      fmt17(cf.kbar1sq_1), fmt17(cf.k1_kbar1), "0"});
    const rs::KFunctionalsQuad q = rs::kfunc_quadrature(kernel, 1e-10);
    t.rows.push_back({"quadrature", fmt17(q.values.k1_1), fmt17(q.values.k2_1),
                      fmt17(q.values.k1sq_1), fmt17(q.values.kbar1sq_1),
                      fmt17(q.values.k1_kbar1), fmt17(q.max_error)});
    emit(t, opt.out, opt.format);
    return 0;
}

int cmd_rate(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto xs = required_grid(opt.x_grid, "--x-grid");
    const auto kernel = rs::KernelSpec::riemann_liouville(p.H);
    const rs::VolModel model = rs::make_rbergomi(p);
    rs::RitzWorkspace ws(model, kernel, opt.basis_spec(), p.rho);
    Table t;
    opt.stamp(t, p);
    t.columns = {"x", "lambda", "sigma_fz", "grad_norm", "converged"};
    for (double x : xs) {
        const rs::RitzSolution sol = rs::rate_function(x, ws);
        const std::string level = (x == 0.0) ? fmt17(p.sigma0)
                                             : fmt17(rs::sigma_level(sol));
        t.rows.push_back({fmt17(x), fmt17(sol.lambda), level, fmt17(sol.grad_norm),
                          sol.converged ? "1" : "0"});
    }
    emit(t, opt.out, opt.format);
    return 0;
}

int cmd_smile(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto xs = required_grid(opt.x_grid, "--x-grid");
    const auto ts = required_grid(opt.t_grid, "--t-grid");
    const auto kernel = rs::KernelSpec::riemann_liouville(p.H);
    const rs::VolModel model = rs::make_rbergomi(p);
    const rs::KFunctionals kf = rs::kfunc_closed_form(p.H);
    const rs::AtmCoefficients atm = rs::atm_coefficients(model, kf, p.rho, p.H);
    rs::RitzWorkspace ws(model, kernel, opt.basis_spec(), p.rho);
    rs::BasisSpec kl_basis = opt.basis_spec();

    Table t;
    opt.stamp(t, p);
    t.columns = {"t", "x", "k", "sigma_fz", "sigma_kl", "sigma_a0", "sigma_expanded"};
    for (double x : xs) {
        const rs::RitzSolution sol = rs::rate_function(x, ws);
        std::optional<double> a_x;
        std::string kl_reason;
        if (x != 0.0) {
            try {
                a_x = rs::kl_correction(sol, model, kernel, kl_basis, opt.n_kl, p.H).a_x;
            } catch (const std::exception& e) {
                kl_reason = e.what();
            }
        }
        if (!kl_reason.empty())
            t.meta.emplace_back("kl_skipped_x_" + fmt17(x), kl_reason);
        for (double tt : ts) {
            const double k = x * std::pow(tt, 0.5 - p.H);
            const std::string fz =
                (x == 0.0) ? fmt17(p.sigma0) : fmt17(rs::sigma_level(sol));
            std::string kl;
            if (x == 0.0 || a_x.has_value())
                kl = fmt17(rs::smile_large_deviation(tt, x, sol, a_x, atm, p.H));
            const double a0v = rs::smile_large_deviation(tt, x, sol, std::nullopt,
                                                         atm, p.H);
            const double exp_v = rs::smile_fully_expanded(tt, x, atm, p.H);
            t.rows.push_back({fmt17(tt), fmt17(x), fmt17(k), fz, kl, fmt17(a0v),
                              fmt17(exp_v)});
        }
    }
    emit(t, opt.out, opt.format);
    return 0;
}

int cmd_term_structure(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto ts = required_grid(opt.t_grid, "--t-grid");
    const rs::VolModel model = rs::make_rbergomi(p);
    const rs::KFunctionals kf = rs::kfunc_closed_form(p.H);
    const rs::AtmCoefficients atm = rs::atm_coefficients(model, kf, p.rho, p.H);
    Table t;
    opt.stamp(t, p);
    t.meta.emplace_back("a0", fmt17(atm.a0));
    t.meta.emplace_back("monotonicity", atm.a0 > 0.0   ? "increasing"
                                        : atm.a0 < 0.0 ? "decreasing"
                                                       : "flat");
    t.columns = {"t", "sigma_atm_expansion", "theta"};
    for (double tt : ts) {
        const double v = p.sigma0 + std::pow(tt, 2.0 * p.H) * atm.a0 / (2.0 * p.sigma0);
        t.rows.push_back({fmt17(tt), fmt17(v), fmt17(p.theta)});
    }
    emit(t, opt.out, opt.format);
    return 0;
}

int cmd_moderate(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto xs = required_grid(opt.x_grid, "--x-grid");
    const auto ts = required_grid(opt.t_grid, "--t-grid");
    const rs::VolModel model = rs::make_rbergomi(p);
    const rs::KFunctionals kf = rs::kfunc_closed_form(p.H);
    const rs::AtmCoefficients atm = rs::atm_coefficients(model, kf, p.rho, p.H);
    Table t;
    opt.stamp(t, p);
    t.meta.emplace_back("beta", fmt17(opt.beta));
    t.meta.emplace_back("order", std::to_string(opt.order));
    t.columns = {"t", "x", "k", "sigma_moderate", "sigma_moderate_ts",
                 "sigma_variance_form"};
    for (double tt : ts) {
        for (double x : xs) {
            const double k = x * std::pow(tt, 0.5 - p.H + opt.beta);
            const double plain = rs::smile_moderate_deviation(tt, x, opt.beta,
                                                              opt.order, atm, false, p.H);
            const double ts_v = rs::smile_moderate_deviation(tt, x, opt.beta,
                                                             opt.order, atm, true, p.H);
            const double var =
                rs::moderate_deviation_variance(tt, x, opt.beta, opt.order, atm, p.H);
            t.rows.push_back({fmt17(tt), fmt17(x), fmt17(k), fmt17(plain), fmt17(ts_v),
                              fmt17(var > 0.0 ? std::sqrt(var) : 0.0)});
        }
    }
    emit(t, opt.out, opt.format);
    return 0;
}

struct McPoint {
    double ivol = 0.0, se = 0.0;
    bool ok = false;
};

McPoint mc_ivol(const rs::PathBundle& bundle, std::size_t mi, double k) {
    const double t = bundle.maturities[mi];
    const Eigen::VectorXd s = bundle.X[mi].array().exp();
    const double strike = std::exp(k);
    const bool use_call = k >= 0.0;
    Eigen::VectorXd payoff;
    if (use_call)
        payoff = (s.array() - strike).cwiseMax(0.0);
    else
        payoff = (strike - s.array()).cwiseMax(0.0);
    const rs::MeanSE price = rs::mean_se(payoff, bundle.antithetic);
    McPoint pt;
    try {
        pt.ivol = rs::implied_vol(price.mean, t, k, use_call);
        const double vega = rs::bs_vega(pt.ivol, t, k);
        pt.se = vega > 0.0 ? price.se / vega : 0.0;
        pt.ok = true;
    } catch (const std::exception&) {
    }
    return pt;
}

int cmd_mc_validate(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto xs = required_grid(opt.x_grid, "--x-grid");
    const auto ts = required_grid(opt.t_grid, "--t-grid");
    const auto kernel = rs::KernelSpec::riemann_liouville(p.H);
    const rs::VolModel model = rs::make_rbergomi(p);
    const rs::KFunctionals kf = rs::kfunc_closed_form(p.H);
    const rs::AtmCoefficients atm = rs::atm_coefficients(model, kf, p.rho, p.H);
    rs::RitzWorkspace ws(model, kernel, opt.basis_spec(), p.rho);
    rs::BasisSpec kl_basis = opt.basis_spec();

    rs::MCConfig cfg;
    cfg.n_paths = opt.paths;
    cfg.n_steps = opt.steps;
    cfg.scheme = rs::parse_scheme(opt.scheme);
    cfg.seed = opt.seed;
    cfg.maturities = ts;
    const rs::PathBundle bundle = rs::simulate(p, cfg);

    Table t;
    opt.stamp(t, p);
    t.meta.emplace_back("paths", std::to_string(opt.paths));
    t.meta.emplace_back("steps", std::to_string(opt.steps));
    t.meta.emplace_back("scheme", rs::scheme_name(cfg.scheme));
    t.columns = {"t",       "x",       "ivol_mc",    "ivol_mc_se", "ivol_kl",
                 "ivol_a0", "ivol_fz", "abs_err_kl", "abs_err_a0", "abs_err_fz"};

    double max_kl = 0.0, max_a0 = 0.0, max_fz = 0.0;
    double sum_kl = 0.0, sum_a0 = 0.0, sum_fz = 0.0;
    long n_used = 0;
    for (double x : xs) {
        const rs::RitzSolution sol = rs::rate_function(x, ws);
        std::optional<double> a_x;
        if (x != 0.0) {
            try {
                a_x = rs::kl_correction(sol, model, kernel, kl_basis, opt.n_kl, p.H).a_x;
            } catch (const std::exception& e) {
                t.meta.emplace_back("kl_skipped_x_" + fmt17(x), e.what());
            }
        }
        for (std::size_t mi = 0; mi < ts.size(); ++mi) {
            const double tt = bundle.maturities[mi];
            const double k = x * std::pow(tt, 0.5 - p.H);
            const McPoint mc = mc_ivol(bundle, mi, k);
            const double fz = (x == 0.0) ? p.sigma0 : rs::sigma_level(sol);
            const double a0v = rs::smile_large_deviation(tt, x, sol, std::nullopt,
                                                         atm, p.H);
            std::string kl_cell, err_kl_cell;
            double kl_v = 0.0;
            const bool have_kl = (x == 0.0) || a_x.has_value();
            if (have_kl) {
                kl_v = rs::smile_large_deviation(tt, x, sol, a_x, atm, p.H);
                kl_cell = fmt17(kl_v);
            }
            std::vector<std::string> row = {fmt17(tt), fmt17(x)};
            if (mc.ok) {
                row.push_back(fmt17(mc.ivol));
                row.push_back(fmt17(mc.se));
            } else {
                row.push_back("");
                row.push_back("");
            }
            row.push_back(kl_cell);
            row.push_back(fmt17(a0v));
            row.push_back(fmt17(fz));
            if (mc.ok) {
                const double e_a0 = std::fabs(a0v - mc.ivol);
                const double e_fz = std::fabs(fz - mc.ivol);
                if (have_kl) {
                    const double e_kl = std::fabs(kl_v - mc.ivol);
                    row.push_back(fmt17(e_kl));
                    max_kl = std::max(max_kl, e_kl);
                    sum_kl += e_kl;
                } else {
                    row.push_back("");
                }
                row.push_back(fmt17(e_a0));
                row.push_back(fmt17(e_fz));
                max_a0 = std::max(max_a0, e_a0);
                max_fz = std::max(max_fz, e_fz);
                sum_a0 += e_a0;
                sum_fz += e_fz;
                ++n_used;
            } else {
                row.insert(row.end(), {"", "", ""});
            }
            t.rows.push_back(row);
        }
    }
    if (n_used > 0) {
        t.summary.emplace_back("max_abs_err_kl", fmt17(max_kl));
        t.summary.emplace_back("max_abs_err_a0", fmt17(max_a0));
        t.summary.emplace_back("max_abs_err_fz", fmt17(max_fz));
        t.summary.emplace_back("mean_abs_err_kl", fmt17(sum_kl / n_used));
        t.summary.emplace_back("mean_abs_err_a0", fmt17(sum_a0 / n_used));
        t.summary.emplace_back("mean_abs_err_fz", fmt17(sum_fz / n_used));
    }
    emit(t, opt.out, opt.format);
    return 0;
}

int cmd_compare(const CommonOpts& opt) {
    const rs::RBergomiParams p = opt.resolve_params();
    const auto xs = required_grid(opt.x_grid, "--x-grid");
    const auto ts = required_grid(opt.t_grid, "--t-grid");
    const auto kernel = rs::KernelSpec::riemann_liouville(p.H);
    const rs::VolModel model = rs::make_rbergomi(p);
    const rs::KFunctionals kf = rs::kfunc_closed_form(p.H);
    const rs::AtmCoefficients atm = rs::atm_coefficients(model, kf, p.rho, p.H);
    rs::RitzWorkspace ws(model, kernel, opt.basis_spec(), p.rho);
    const bool with_moderate = opt.beta > 0.0;

    Table t;
    opt.stamp(t, p);
    t.columns = {"t", "x", "k", "sigma_fz", "sigma_a0", "sigma_expanded"};
    if (with_moderate) t.columns.push_back("sigma_moderate_ts");
    for (double x : xs) {
        const rs::RitzSolution sol = rs::rate_function(x, ws);
        for (double tt : ts) {
            const double k = x * std::pow(tt, 0.5 - p.H);
            const std::string fz =
                (x == 0.0) ? fmt17(p.sigma0) : fmt17(rs::sigma_level(sol));
            const double a0v = rs::smile_large_deviation(tt, x, sol, std::nullopt,
                                                         atm, p.H);
            std::vector<std::string> row = {fmt17(tt), fmt17(x), fmt17(k), fz,
                                            fmt17(a0v),
                                            fmt17(rs::smile_fully_expanded(tt, x, atm,
                                                                           p.H))};
            if (with_moderate)
                row.push_back(fmt17(rs::smile_moderate_deviation(
                    tt, x, opt.beta, opt.order, atm, true, p.H)));
            t.rows.push_back(row);
        }
    }
    emit(t, opt.out, opt.format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"short-maturity implied-volatility smiles under rough volatility"};
    app.require_subcommand(1);

    CommonOpts kfunc_o, rate_o, smile_o, term_o, moderate_o, mc_o, compare_o;
    kfunc_o.attach(app.add_subcommand("kfunc", "kernel functionals"));
    rate_o.attach(app.add_subcommand("rate", "rate function over an x-grid"));
    smile_o.attach(app.add_subcommand("smile", "smile approximations"));
    term_o.attach(app.add_subcommand("term-structure", "ATM term structure"));
    moderate_o.attach(app.add_subcommand("moderate", "moderate-deviation smile"));
    mc_o.attach(app.add_subcommand("mc-validate", "Monte Carlo validation table"));
    compare_o.attach(app.add_subcommand("compare", "side-by-side approximations"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("kfunc")) return cmd_kfunc(kfunc_o);
        if (app.got_subcommand("rate")) return cmd_rate(rate_o);
        if (app.got_subcommand("smile")) return cmd_smile(smile_o);
        if (app.got_subcommand("term-structure")) return cmd_term_structure(term_o);
        if (app.got_subcommand("moderate")) return cmd_moderate(moderate_o);
        if (app.got_subcommand("mc-validate")) return cmd_mc_validate(mc_o);
        if (app.got_subcommand("compare")) return cmd_compare(compare_o);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
