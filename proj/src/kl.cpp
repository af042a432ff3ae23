#include "roughsmile/kl.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace roughsmile {

KLCoeffs kl_coefficients(const RitzSolution& sol, const VolModel& model,
                         const KernelSpec& kernel, const BasisSpec& kl_basis, int n_kl) {
    if (n_kl < 1) throw std::invalid_argument("n_kl must be >= 1");
    if (!sol.converged)
        throw std::runtime_error("kl_coefficients: Ritz solution did not converge");
    BasisSpec basis = kl_basis;
    basis.n = n_kl;
    basis.validate();

    const Eigen::MatrixXd e_dot = basis_dot_matrix(basis, sol.grid);
    const Eigen::MatrixXd e_hat = basis_hat_matrix(basis, kernel, sol.grid);

    const Eigen::Index nodes = sol.grid.s.size();
    Eigen::VectorXd sig_p(nodes), sig_pp(nodes);
    for (Eigen::Index j = 0; j < nodes; ++j) {
        sig_p[j] = model.dsigma_dx(sol.hhat[j], 0.0);
        sig_pp[j] = model.d2sigma_dx2(sol.hhat[j], 0.0);
    }

    const double rho = sol.rho;
    const double rho_bar = std::sqrt(1.0 - rho * rho);
    const Eigen::VectorXd& w = sol.grid.w;

    KLCoeffs c;
    const Eigen::VectorXd w_sig = w.cwiseProduct(sol.sigma_path);
    const Eigen::VectorXd w_sigp_ht = w.cwiseProduct(sig_p).cwiseProduct(sol.htildedot);
    c.g = e_hat.transpose() * w_sigp_ht + rho * (e_dot.transpose() * w_sig);
    c.g_bar = rho_bar * (e_dot.transpose() * w_sig);

    const Eigen::VectorXd w_sigpp_ht = w.cwiseProduct(sig_pp).cwiseProduct(sol.htildedot);
    c.alpha = e_hat.transpose() * w_sigpp_ht.asDiagonal() * e_hat;
    c.beta = e_hat.transpose() * w.cwiseProduct(sig_p).asDiagonal() * e_dot;
    return c;
}

Delta2Terms delta2_assembly(const KLCoeffs& c, double rho, double sigma_x_sq,
                            const ExtraCTerms& extra) {
    const Eigen::Index n = c.g.size();
    if (c.g_bar.size() != n || c.alpha.rows() != n || c.alpha.cols() != n ||
        c.beta.rows() != n || c.beta.cols() != n)
        throw std::invalid_argument("delta2_assembly: dimension mismatch");
    if (!(sigma_x_sq > 0.0)) throw std::domain_error("delta2_assembly: sigma_x^2 <= 0");

    const double rho_bar = std::sqrt(1.0 - rho * rho);
    const double s2 = sigma_x_sq;
    const double s4 = s2 * s2;
    const Eigen::VectorXd g_tilde = rho * c.g + rho_bar * c.g_bar;

    const Eigen::VectorXd u = c.alpha * c.g;            // sum_k g_k alpha_{.k}
    const Eigen::VectorXd p = c.beta * g_tilde;         // sum_k gtilde_k beta_{.k}
    const Eigen::VectorXd q = c.beta.transpose() * c.g; // sum_k g_k beta_{k.}
    const double qa = c.g.dot(u);                       // g' alpha g
    const double qb = c.g.dot(p);                       // g' beta gtilde

    Delta2Terms d;
    d.eta0 = 0.5 * c.alpha + rho * c.beta - (1.0 / s2) * (c.g * (u + p).transpose()) -
             (rho / s2) * (c.g * q.transpose()) +
             ((0.5 * qa + qb) / s4) * (c.g * c.g.transpose());

    // full gamma/gamma-bar cross coefficient: the g1^2 term enters the cross
    // block with factor 2 (2 (g.gamma)(gbar.gammabar) in the square)
    d.eta1 = rho_bar * c.beta - (1.0 / s2) * ((u + p) * c.g_bar.transpose()) -
             (rho / s2) * (q * c.g_bar.transpose()) -
             (rho_bar / s2) * (c.g * q.transpose()) +
             ((qa + 2.0 * qb) / s4) * (c.g * c.g_bar.transpose());

    d.eta2 = -(rho_bar / s2) * (c.g_bar * q.transpose()) +
             ((0.5 * qa + qb) / s4) * (c.g_bar * c.g_bar.transpose());

    d.C = extra.sigma_dot_integral + 0.5 * c.alpha.trace() - 0.5 * qa / s2 - qb / s2 +
          extra.half_h_term;
    return d;
}

double carleman_fredholm(const Eigen::VectorXd& eigenvalues) {
    double log_val = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        const double lam = eigenvalues[k];
        if (lam >= 0.5)
            throw std::domain_error("carleman_fredholm: eigenvalue " + std::to_string(k) +
                                    " >= 1/2 (degenerate minimizer)");
        log_val += -0.5 * std::log1p(-2.0 * lam) - lam;
    }
    return std::exp(log_val);
}

void a_correction(double x, const RitzSolution& sol, KLCorrection& corr, double H) {
    if (x == 0.0)
        throw std::domain_error("a_correction: x=0 is handled by the closed-form a0");

    const Eigen::Index n = corr.coeffs.g.size();
    corr.sigma_x_sq = corr.coeffs.sigma_x_sq();
    corr.lambda_prime = rate_derivative(sol, corr.sigma_x_sq);

    Eigen::MatrixXd M(2 * n, 2 * n);
    const Delta2Terms& d = corr.delta2;
    M.topLeftCorner(n, n) = 0.5 * (d.eta0 + d.eta0.transpose());
    // eta1 is the full cross coefficient; the two off-diagonal blocks of the
    // symmetric form each carry half of it
    M.topRightCorner(n, n) = 0.5 * d.eta1;
    M.bottomLeftCorner(n, n) = 0.5 * d.eta1.transpose();
    M.bottomRightCorner(n, n) = 0.5 * (d.eta2 + d.eta2.transpose());
    M *= corr.lambda_prime;
    corr.M = M;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    corr.eigenvalues = es.eigenvalues();
    for (Eigen::Index k = 0; k < corr.eigenvalues.size(); ++k)
        if (corr.eigenvalues[k] >= 0.5)
            throw std::domain_error("a_correction: eigenvalue " + std::to_string(k) +
                                    " of M is >= 1/2 (degenerate minimizer)");

    double A = std::exp(corr.lambda_prime * d.C) * carleman_fredholm(corr.eigenvalues);
    const bool half = (H == 0.5);
    if (half) A *= std::exp(x);
    corr.A_x = A;

    const double lam = sol.lambda;
    double arg = 2.0 * A * lam / (corr.lambda_prime * x);
    if (half) arg /= std::exp(0.5 * x);
    if (!(arg > 0.0))
        throw std::runtime_error("a_correction: nonpositive log argument (regime breakdown)");
    corr.a_x = x * x / (2.0 * lam * lam) * std::log(arg);
}

KLCorrection kl_correction(const RitzSolution& sol, const VolModel& model,
                           const KernelSpec& kernel, const BasisSpec& kl_basis,
                           int n_kl, double H) {
    KLCorrection corr;
    corr.n_kl = n_kl;
    corr.coeffs = kl_coefficients(sol, model, kernel, kl_basis, n_kl);
    corr.sigma_x_sq = corr.coeffs.sigma_x_sq();

    ExtraCTerms extra;
    const Eigen::Index nodes = sol.grid.s.size();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nodes; ++j)
        acc += sol.grid.w[j] * model.dsigma_dy(sol.hhat[j], 0.0) *
               std::pow(sol.grid.s[j], 2.0 * H) * sol.htildedot[j];
    extra.sigma_dot_integral = acc;
    if (H == 0.5)
        extra.half_h_term =
            -0.5 * sol.grid.w.dot(sol.sigma_path.cwiseProduct(sol.sigma_path));

    corr.delta2 = delta2_assembly(corr.coeffs, sol.rho, corr.sigma_x_sq, extra);
    a_correction(sol.x, sol, corr, H);
    return corr;
}

void dump_kl_json(const KLCorrection& corr, const std::string& path) {
    nlohmann::json j;
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    auto mat = [&](const Eigen::MatrixXd& m) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            rows.emplace_back(m.row(r).begin(), m.row(r).end());
        }
        return rows;
    };
    j["n_kl"] = corr.n_kl;
    j["g"] = vec(corr.coeffs.g);
    j["g_bar"] = vec(corr.coeffs.g_bar);
    j["alpha"] = mat(corr.coeffs.alpha);
    j["beta"] = mat(corr.coeffs.beta);
    j["eta0"] = mat(corr.delta2.eta0);
    j["eta1"] = mat(corr.delta2.eta1);
    j["eta2"] = mat(corr.delta2.eta2);
    j["C"] = corr.delta2.C;
    j["sigma_x_sq"] = corr.sigma_x_sq;
    j["lambda_prime"] = corr.lambda_prime;
    j["eigenvalues"] = vec(corr.eigenvalues);
    j["A_x"] = corr.A_x;
    j["a_x"] = corr.a_x;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace roughsmile
