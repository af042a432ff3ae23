#include "roughsmile/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace roughsmile {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct HaarAtom {
    double a, b, c, amp;  // support [a,c], sign flip at b, amplitude 2^{k/2}
};

HaarAtom haar_atom(int i) {
    // i >= 2 decomposes as 2^k + l, k >= 0, 1 <= l <= 2^k
    int k = 0;
    while ((1 << (k + 1)) <= i - 1) ++k;
    const int l = i - (1 << k);
    const double denom = std::pow(2.0, k + 1);
    HaarAtom at;
    at.a = (2.0 * l - 2.0) / denom;
    at.b = (2.0 * l - 1.0) / denom;
    at.c = (2.0 * l) / denom;
    at.amp = std::pow(2.0, 0.5 * k);
    return at;
}

}  // namespace

void BasisSpec::validate() const {
    if (n < 1) throw std::invalid_argument("basis size must be >= 1");
}

double basis_dot(const BasisSpec& basis, int i, double s) {
    if (i < 1 || i > basis.n) throw std::out_of_range("basis atom index");
    if (i == 1) return 1.0;
    if (basis.kind == BasisKind::Fourier) {
        const int n = i / 2;
        if (i % 2 == 0) return kSqrt2 * std::cos(2.0 * M_PI * n * s);
        return kSqrt2 * std::sin(2.0 * M_PI * n * s);
    }
    const HaarAtom at = haar_atom(i);
    if (s >= at.a && s < at.b) return at.amp;
    if (s >= at.b && s < at.c) return -at.amp;
    return 0.0;
}

double basis_e(const BasisSpec& basis, int i, double s) {
    if (i < 1 || i > basis.n) throw std::out_of_range("basis atom index");
    if (i == 1) return s;
    if (basis.kind == BasisKind::Fourier) {
        const int n = i / 2;
        const double c = 2.0 * M_PI * n;
        if (i % 2 == 0) return kSqrt2 * std::sin(c * s) / c;
        return kSqrt2 * (1.0 - std::cos(c * s)) / c;
    }
    const HaarAtom at = haar_atom(i);
    if (s <= at.a) return 0.0;
    if (s <= at.b) return at.amp * (s - at.a);
    if (s <= at.c) return at.amp * (at.c - s);
    return 0.0;
}

PathGrid PathGrid::make(int cells) {
    if (cells < 1) throw std::invalid_argument("grid needs >= 1 cell");
    PathGrid g;
    g.s.resize(2 * cells);
    g.w.resize(2 * cells);
    const double h = 1.0 / cells;
    const double off = 0.5 / std::sqrt(3.0);
    for (int c = 0; c < cells; ++c) {
        const double mid = (c + 0.5) * h;
        g.s[2 * c] = mid - off * h;
        g.s[2 * c + 1] = mid + off * h;
        g.w[2 * c] = 0.5 * h;
        g.w[2 * c + 1] = 0.5 * h;
    }
    return g;
}

Eigen::MatrixXd basis_dot_matrix(const BasisSpec& basis, const PathGrid& grid) {
    basis.validate();
    Eigen::MatrixXd m(grid.s.size(), basis.n);
    for (int i = 1; i <= basis.n; ++i)
        for (Eigen::Index j = 0; j < grid.s.size(); ++j)
            m(j, i - 1) = basis_dot(basis, i, grid.s[j]);
    return m;
}

double basis_hat(const BasisSpec& basis, const KernelSpec& kernel, int i, double t) {
    if (i == 1) return kernel.k1(t);
    if (basis.kind == BasisKind::Haar) {
        const HaarAtom at = haar_atom(i);
        return at.amp * (convolve_indicator(kernel, at.a, at.b, t) -
                         convolve_indicator(kernel, at.b, at.c, t));
    }
    auto f = [&](double s) { return basis_dot(basis, i, s); };
    return convolve(kernel, f, t, 1e-11);
}

Eigen::MatrixXd basis_hat_matrix(const BasisSpec& basis, const KernelSpec& kernel,
                                 const PathGrid& grid) {
    basis.validate();
    Eigen::MatrixXd m(grid.s.size(), basis.n);
    for (int i = 1; i <= basis.n; ++i)
        for (Eigen::Index j = 0; j < grid.s.size(); ++j)
            m(j, i - 1) = basis_hat(basis, kernel, i, grid.s[j]);
    return m;
}

}  // namespace roughsmile
