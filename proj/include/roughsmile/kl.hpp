#pragma once

#include <Eigen/Dense>
#include <string>

#include "roughsmile/ritz.hpp"

namespace roughsmile {

// Projection of the first-order chaos g1 on the KL atoms plus the
// quadratic-chaos integral matrices.
struct KLCoeffs {
    Eigen::VectorXd g;      // coefficients on gamma
    Eigen::VectorXd g_bar;  // coefficients on gamma_bar
    Eigen::MatrixXd alpha;  // sigma'' <e_hat_i e_hat_j, d htilde>
    Eigen::MatrixXd beta;   // sigma'  <e_hat_i, de_j>
    double sigma_x_sq() const { return g.squaredNorm() + g_bar.squaredNorm(); }
};

struct Delta2Terms {
    Eigen::MatrixXd eta0, eta1, eta2;
    double C = 0.0;
};

// Deterministic integrals entering C that are not expressible through the
// alpha/beta sums: the sigma_dot weight integral, and the H=1/2 extra term.
struct ExtraCTerms {
    double sigma_dot_integral = 0.0;  // int sigma_dot(hhat,0) s^{2H} d htilde
    double half_h_term = 0.0;         // -1/2 int sigma^2(hhat,0) ds when H=1/2, else 0
};

struct KLCorrection {
    int n_kl = 0;
    KLCoeffs coeffs;
    double sigma_x_sq = 0.0;
    Delta2Terms delta2;
    double lambda_prime = 0.0;
    Eigen::MatrixXd M;           // 2N x 2N symmetric
    Eigen::VectorXd eigenvalues;
    double A_x = 0.0;
    double a_x = 0.0;
};

KLCoeffs kl_coefficients(const RitzSolution& sol, const VolModel& model,
                         const KernelSpec& kernel, const BasisSpec& kl_basis, int n_kl);

Delta2Terms delta2_assembly(const KLCoeffs& c, double rho, double sigma_x_sq,
                            const ExtraCTerms& extra);

// Pi_k (1-2 lambda_k)^{-1/2} exp(-lambda_k), computed in log space.
double carleman_fredholm(const Eigen::VectorXd& eigenvalues);

// A(x) and a(x) from assembled Delta2 terms; H=1/2 branches applied on exact
// equality of the configured H.
void a_correction(double x, const RitzSolution& sol, KLCorrection& corr, double H);

// Full pipeline: coefficients -> Delta2 -> Carleman-Fredholm -> A(x), a(x).
KLCorrection kl_correction(const RitzSolution& sol, const VolModel& model,
                           const KernelSpec& kernel, const BasisSpec& kl_basis,
                           int n_kl, double H);

// Structured dump of the KL internals for offline inspection.
void dump_kl_json(const KLCorrection& corr, const std::string& path);

}  // namespace roughsmile
