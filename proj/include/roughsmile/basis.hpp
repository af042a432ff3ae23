#pragma once

#include <Eigen/Dense>

#include "roughsmile/kernels.hpp"

namespace roughsmile {

enum class BasisKind { Fourier, Haar };

struct BasisSpec {
    BasisKind kind = BasisKind::Haar;
    int n = 8;  // number of atoms

    void validate() const;
};

// Derivative atom  \dot e_i(s), i in [1..n], s in [0,1].
double basis_dot(const BasisSpec& basis, int i, double s);
// Primitive atom  e_i(s) = int_0^s \dot e_i(u) du.
double basis_e(const BasisSpec& basis, int i, double s);

// Quadrature grid on [0,1]: `cells` equal cells with 2-point Gauss-Legendre
// nodes each, so piecewise-smooth integrands with dyadic breakpoints are
// integrated without touching the discontinuities.
struct PathGrid {
    Eigen::VectorXd s;  // nodes, size 2*cells
    Eigen::VectorXd w;  // weights summing to 1
    static PathGrid make(int cells = 2048);
};

// Matrix of \dot e_i at grid nodes (nodes x n).
Eigen::MatrixXd basis_dot_matrix(const BasisSpec& basis, const PathGrid& grid);
// Matrix of \hat e_i = K \dot e_i at grid nodes (nodes x n). Exact primitives
// for Haar atoms under Riemann-Liouville; quadrature otherwise.
Eigen::MatrixXd basis_hat_matrix(const BasisSpec& basis, const KernelSpec& kernel,
                                 const PathGrid& grid);

// \hat e_i at an arbitrary time (same rules as basis_hat_matrix).
double basis_hat(const BasisSpec& basis, const KernelSpec& kernel, int i, double t);

}  // namespace roughsmile
