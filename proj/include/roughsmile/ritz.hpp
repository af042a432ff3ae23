#pragma once

#include <Eigen/Dense>

#include "roughsmile/basis.hpp"
#include "roughsmile/kernels.hpp"
#include "roughsmile/volmodel.hpp"

namespace roughsmile {

struct RitzOptions {
    int cells = 2048;          // quadrature cells for path integrals
    double grad_tol = 1e-10;   // first-order stationarity tolerance
    int max_iter = 1000;
    double x_cap = 2.0;        // wing cap; beyond it the minimizer is unreliable
};

// Minimizer of the Ritz objective
//   (x - rho G(h))^2 / (2 rhobar^2 F(h)) + <hdot,hdot>/2
// with F(h) = <sigma^2(hhat,0),1>, G(h) = <sigma(hhat,0),hdot>.
struct RitzSolution {
    double x = 0.0;
    double rho = 0.0;
    double lambda = 0.0;  // minimized rate-function value
    double F_val = 0.0;
    double G_val = 0.0;
    Eigen::VectorXd coeffs;
    BasisSpec basis;
    double grad_norm = 0.0;
    bool converged = true;

    PathGrid grid;
    // samples at grid nodes
    Eigen::VectorXd hdot, hhat, hbardot, htildedot;
    Eigen::VectorXd sigma_path;  // sigma(hhat,0)

    // linear-interpolation path evaluators on [0,1]
    double h(double s) const;
    double hbar(double s) const;
    double htilde(double s) const;
    double hhat_at(double s) const;

    // two-path energy 1/2 ||(h,hbar)||^2 recomputed from the stored paths
    double energy() const;
};

// Shared precomputation so repeated x-solves reuse the basis matrices.
struct RitzWorkspace {
    VolModel model;
    KernelSpec kernel;
    BasisSpec basis;
    double rho;
    RitzOptions options;
    PathGrid grid;
    Eigen::MatrixXd e_dot;  // nodes x n
    Eigen::MatrixXd e_hat;  // nodes x n

    RitzWorkspace(const VolModel& model, const KernelSpec& kernel,
                  const BasisSpec& basis, double rho, const RitzOptions& opt = {});
};

RitzSolution rate_function(double x, const RitzWorkspace& ws);
RitzSolution rate_function(double x, const VolModel& model, const KernelSpec& kernel,
                           const BasisSpec& basis, double rho,
                           const RitzOptions& opt = {});

// Sigma(x) = |x| / sqrt(2 Lambda(x)); x must be nonzero.
double sigma_level(const RitzSolution& sol);

// Lambda'(x) = sgn(x) sqrt(2 Lambda(x) / sigma_x^2).
double rate_derivative(const RitzSolution& sol, double sigma_x_sq);

}  // namespace roughsmile
