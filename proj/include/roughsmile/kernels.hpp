#pragma once

#include <functional>
#include <string>
#include <vector>

namespace roughsmile {

enum class KernelKind { RiemannLiouville, TabulatedSelfSimilar };

// Self-similar Volterra kernel K(t,s) = (t-s)^{H-1/2} f_K(s/t), K(t,s)=0 for t<s.
// Riemann-Liouville corresponds to the constant shape f_K = sqrt(2H).
class KernelSpec {
  public:
    static KernelSpec riemann_liouville(double H);
    // Shape function tabulated on a Chebyshev grid; f evaluated on (0,1].
    static KernelSpec tabulated(double H, const std::function<double(double)>& f_K,
                                int n_cheb = 64);
    // Two-column text file (grid point, f_K value), header "# fK H=<value>".
    static KernelSpec from_file(const std::string& path);

    double hurst() const { return H_; }
    KernelKind kind() const { return kind_; }

    double operator()(double t, double s) const;  // K(t,s)
    double shape(double r) const;                 // f_K(r)

    double k1(double t) const;     // (K1)(t) = int_0^t K(t,s) ds
    double kbar1(double u) const;  // (Kbar 1)(u) = int_u^1 K(t,u) dt

    // int_0^1 (1-r)^{H-1/2} f_K(r) dr, so that K1(t) = c1 * t^{H+1/2}.
    double shape_moment() const { return c1_; }

  private:
    KernelSpec() = default;
    double H_ = 0.5;
    KernelKind kind_ = KernelKind::RiemannLiouville;
    std::vector<double> cheb_x_, cheb_f_, cheb_w_;  // barycentric data
    double c1_ = 0.0;
};

// The five K-functionals on [0,1].
struct KFunctionals {
    double k1_1;       // <K1,1>
    double k2_1;       // <K^2 1,1>
    double k1sq_1;     // <(K1)^2,1>
    double kbar1sq_1;  // <(Kbar1)^2,1>
    double k1_kbar1;   // <K1,Kbar1>
};

// Closed forms for the Riemann-Liouville kernel, H in (0,1/2].
KFunctionals kfunc_closed_form(double H);

struct KFunctionalsQuad {
    KFunctionals values;
    double max_error = 0.0;
    bool converged = true;
};
// Singularity-aware quadrature; works for any kernel with H in [0.02, 1/2].
KFunctionalsQuad kfunc_quadrature(const KernelSpec& kernel, double tol);

// <Kbar1,1> by quadrature (Fubini partner of <K1,1>).
double adjoint_k1_mean_quadrature(const KernelSpec& kernel, double tol);

// (Kf)(t) = int_0^t K(t,s) f(s) ds by singularity-removing quadrature.
double convolve(const KernelSpec& kernel, const std::function<double(double)>& f,
                double t, double tol = 1e-12);

// Exact primitive for f = 1_[a,b] under the Riemann-Liouville kernel;
// falls back to quadrature for tabulated kernels.
double convolve_indicator(const KernelSpec& kernel, double a, double b, double t);

double adjoint_k1(const KernelSpec& kernel, double u);

}  // namespace roughsmile
