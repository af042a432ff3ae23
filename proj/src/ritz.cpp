#include "roughsmile/ritz.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roughsmile {

namespace {

double interp_from_zero(const Eigen::VectorXd& s, const Eigen::VectorXd& v, double t) {
    // piecewise-linear through (0,0),(s_0,v_0),...,(s_last,v_last), flat beyond
    if (t <= 0.0) return 0.0;
    const Eigen::Index n = s.size();
    if (t >= s[n - 1]) return v[n - 1];
    const double* begin = s.data();
    const double* it = std::upper_bound(begin, begin + n, t);
    const Eigen::Index j = it - begin;  // first node > t
    const double s0 = (j == 0) ? 0.0 : s[j - 1];
    const double v0 = (j == 0) ? 0.0 : v[j - 1];
    const double w = (t - s0) / (s[j] - s0);
    return (1.0 - w) * v0 + w * v[j];
}

struct Objective {
    const RitzWorkspace& ws;
    double x;
    double rho, rho_bar2;

    double operator()(const Eigen::VectorXd& a, Eigen::VectorXd* grad,
                      double* F_out = nullptr, double* G_out = nullptr) const {
        const Eigen::VectorXd hdot = ws.e_dot * a;
        const Eigen::VectorXd hhat = ws.e_hat * a;
        const Eigen::Index n = hhat.size();
        Eigen::VectorXd sig(n), sigp(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            sig[j] = ws.model.sigma(hhat[j], 0.0);
            if (grad) sigp[j] = ws.model.dsigma_dx(hhat[j], 0.0);
        }
        const double F = ws.grid.w.dot(sig.cwiseProduct(sig));
        const double G = ws.grid.w.dot(sig.cwiseProduct(hdot));
        if (!std::isfinite(F) || !std::isfinite(G) || F <= 0.0)
            throw std::runtime_error("ritz: sigma overflow/NaN along candidate path");
        const double u = x - rho * G;
        const double obj = u * u / (2.0 * rho_bar2 * F) + 0.5 * a.squaredNorm();
        if (grad) {
            const Eigen::VectorXd dF =
                ws.e_hat.transpose() * (ws.grid.w.cwiseProduct(2.0 * sig.cwiseProduct(sigp)));
            const Eigen::VectorXd dG =
                ws.e_hat.transpose() * (ws.grid.w.cwiseProduct(sigp.cwiseProduct(hdot))) +
                ws.e_dot.transpose() * (ws.grid.w.cwiseProduct(sig));
            *grad = -(u * rho / (rho_bar2 * F)) * dG -
                    (u * u / (2.0 * rho_bar2 * F * F)) * dF + a;
        }
        if (F_out) *F_out = F;
        if (G_out) *G_out = G;
        return obj;
    }
};

// BFGS with Armijo backtracking.
struct BfgsResult {
    Eigen::VectorXd a;
    double value = 0.0;
    double grad_norm = 0.0;
    bool converged = false;
};

BfgsResult bfgs(const Objective& f, Eigen::VectorXd a, double tol, int max_iter) {
    const Eigen::Index n = a.size();
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n);
    double val = f(a, &g);
    BfgsResult res;
    for (int it = 0; it < max_iter; ++it) {
        if (g.norm() <= tol) break;
        Eigen::VectorXd dir = -(Hinv * g);
        if (dir.dot(g) >= 0.0) {  // reset on loss of descent
            Hinv.setIdentity();
            dir = -g;
        }
        double step = 1.0;
        const double slope = g.dot(dir);
        Eigen::VectorXd a_new, g_new(n);
        double val_new = val;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            a_new = a + step * dir;
            try {
                val_new = f(a_new, nullptr);
            } catch (const std::runtime_error&) {
                step *= 0.5;
                continue;
            }
            if (val_new <= val + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // Near the minimum the true decrease drops below rounding noise in
            // the objective and Armijo rejects every step; fall back to the
            // quasi-Newton step and accept it when it reduces the gradient.
            a_new = a + dir;
            try {
                val_new = f(a_new, &g_new);
            } catch (const std::runtime_error&) {
                break;
            }
            if (g_new.norm() < g.norm() &&
                val_new <= val + 1e-12 * (1.0 + std::fabs(val)))
                accepted = true;
        }
        if (!accepted) break;
        val_new = f(a_new, &g_new);
        const Eigen::VectorXd s = a_new - a;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            const double rho_b = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            Hinv = (I - rho_b * s * y.transpose()) * Hinv *
                       (I - rho_b * y * s.transpose()) +
                   rho_b * s * s.transpose();
        }
        a = a_new;
        g = g_new;
        val = val_new;
    }
    res.a = a;
    res.value = val;
    res.grad_norm = g.norm();
    res.converged = res.grad_norm <= tol;
    return res;
}

// Damped Newton refinement with a finite-difference Hessian of the analytic
// gradient. BFGS alone stalls once the objective decrease falls below rounding
// noise; Newton steps keep contracting the gradient quadratically.
void newton_polish(const Objective& f, BfgsResult& res, double tol, int max_iter) {
    const Eigen::Index n = res.a.size();
    Eigen::VectorXd a = res.a, g(n), g_eps(n);
    double val = f(a, &g);
    for (int it = 0; it < max_iter && g.norm() > tol; ++it) {
        Eigen::MatrixXd hess(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double eps = 1e-6 * (1.0 + std::fabs(a[i]));
            Eigen::VectorXd a_eps = a;
            a_eps[i] += eps;
            f(a_eps, &g_eps);
            hess.col(i) = (g_eps - g) / eps;
        }
        hess = 0.5 * (hess + hess.transpose()).eval();
        bool stepped = false;
        double mu = 0.0;
        for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
            const Eigen::MatrixXd reg =
                hess + mu * Eigen::MatrixXd::Identity(n, n);
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
            if (ldlt.info() == Eigen::Success) {
                const Eigen::VectorXd d = ldlt.solve(-g);
                Eigen::VectorXd a_new = a + d;
                double val_new;
                Eigen::VectorXd g_new(n);
                try {
                    val_new = f(a_new, &g_new);
                    if (g_new.norm() < g.norm() &&
                        val_new <= val + 1e-12 * (1.0 + std::fabs(val))) {
                        a = a_new;
                        g = g_new;
                        val = val_new;
                        stepped = true;
                    }
                } catch (const std::runtime_error&) {
                }
            }
            mu = (mu == 0.0) ? 1e-8 : mu * 100.0;
        }
        if (!stepped) break;
    }
    if (val <= res.value + 1e-12 * (1.0 + std::fabs(res.value)) &&
        g.norm() < res.grad_norm) {
        res.a = a;
        res.value = val;
        res.grad_norm = g.norm();
        res.converged = res.grad_norm <= tol;
    }
}

}  // namespace

RitzWorkspace::RitzWorkspace(const VolModel& model_, const KernelSpec& kernel_,
                             const BasisSpec& basis_, double rho_,
                             const RitzOptions& opt)
    : model(model_), kernel(kernel_), basis(basis_), rho(rho_), options(opt) {
    basis.validate();
    if (!(rho > -1.0 && rho < 1.0)) throw std::domain_error("rho must lie in (-1,1)");
    grid = PathGrid::make(opt.cells);
    e_dot = basis_dot_matrix(basis, grid);
    e_hat = basis_hat_matrix(basis, kernel, grid);
}

RitzSolution rate_function(double x, const RitzWorkspace& ws) {
    if (std::fabs(x) > ws.options.x_cap)
        throw std::domain_error("ritz: |x| exceeds the wing cap; minimizer unreliable there");

    RitzSolution sol;
    sol.x = x;
    sol.rho = ws.rho;
    sol.basis = ws.basis;
    sol.grid = ws.grid;

    const double rho = ws.rho;
    const double rho_bar2 = 1.0 - rho * rho;
    const Eigen::Index nodes = ws.grid.s.size();

    if (x == 0.0) {
        sol.coeffs = Eigen::VectorXd::Zero(ws.basis.n);
        sol.lambda = 0.0;
        sol.F_val = ws.model.sigma0 * ws.model.sigma0;
        sol.G_val = 0.0;
        sol.grad_norm = 0.0;
        sol.converged = true;
        sol.hdot = Eigen::VectorXd::Zero(nodes);
        sol.hhat = Eigen::VectorXd::Zero(nodes);
        sol.hbardot = Eigen::VectorXd::Zero(nodes);
        sol.htildedot = Eigen::VectorXd::Zero(nodes);
        sol.sigma_path = Eigen::VectorXd::Constant(nodes, ws.model.sigma0);
        return sol;
    }

    Objective obj{ws, x, rho, rho_bar2};

    // multistart: zero and the first-order path h ~ (rho/sigma0) t x
    Eigen::VectorXd a0 = Eigen::VectorXd::Zero(ws.basis.n);
    Eigen::VectorXd a1 = a0;
    a1[0] = rho * x / ws.model.sigma0;
    BfgsResult best = bfgs(obj, a1, ws.options.grad_tol, ws.options.max_iter);
    BfgsResult alt = bfgs(obj, a0, ws.options.grad_tol, ws.options.max_iter);
    if (alt.value < best.value) best = alt;
    if (!best.converged) newton_polish(obj, best, ws.options.grad_tol, 30);

    sol.coeffs = best.a;
    sol.grad_norm = best.grad_norm;
    sol.converged = best.converged;
    sol.lambda = obj(best.a, nullptr, &sol.F_val, &sol.G_val);

    sol.hdot = ws.e_dot * sol.coeffs;
    sol.hhat = ws.e_hat * sol.coeffs;
    sol.sigma_path.resize(nodes);
    for (Eigen::Index j = 0; j < nodes; ++j)
        sol.sigma_path[j] = ws.model.sigma(sol.hhat[j], 0.0);
    const double scale = (x - rho * sol.G_val) / (std::sqrt(rho_bar2) * sol.F_val);
    sol.hbardot = scale * sol.sigma_path;
    sol.htildedot = rho * sol.hdot + std::sqrt(rho_bar2) * sol.hbardot;
    return sol;
}

RitzSolution rate_function(double x, const VolModel& model, const KernelSpec& kernel,
                           const BasisSpec& basis, double rho, const RitzOptions& opt) {
    RitzWorkspace ws(model, kernel, basis, rho, opt);
    return rate_function(x, ws);
}

double RitzSolution::h(double s) const {
    double v = 0.0;
    for (int i = 1; i <= basis.n; ++i) v += coeffs[i - 1] * basis_e(basis, i, s);
    return v;
}

double RitzSolution::hhat_at(double s) const { return interp_from_zero(grid.s, hhat, s); }

double RitzSolution::hbar(double s) const {
    // integrate hbardot over [0,s] on the grid
    double acc = 0.0;
    for (Eigen::Index j = 0; j < grid.s.size(); ++j) {
        if (grid.s[j] > s) break;
        acc += grid.w[j] * hbardot[j];
    }
    return acc;
}

double RitzSolution::htilde(double s) const {
    const double rho_bar = std::sqrt(1.0 - rho * rho);
    return rho * h(s) + rho_bar * hbar(s);
}

double RitzSolution::energy() const {
    return 0.5 * (coeffs.squaredNorm() + grid.w.dot(hbardot.cwiseProduct(hbardot)));
}

double sigma_level(const RitzSolution& sol) {
    if (sol.x == 0.0) throw std::domain_error("sigma_level: use the ATM coefficients at x=0");
    if (sol.lambda <= 1e-14)
        throw std::domain_error("sigma_level: Lambda too small (division guard)");
    return std::fabs(sol.x) / std::sqrt(2.0 * sol.lambda);
}

double rate_derivative(const RitzSolution& sol, double sigma_x_sq) {
    if (!(sigma_x_sq > 0.0)) throw std::domain_error("rate_derivative: sigma_x^2 must be > 0");
    if (sol.x == 0.0) throw std::domain_error("rate_derivative: x must be nonzero");
    const double s = std::sqrt(2.0 * sol.lambda / sigma_x_sq);
    return sol.x > 0.0 ? s : -s;
}

}  // namespace roughsmile
