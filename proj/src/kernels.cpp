#include "roughsmile/kernels.hpp"
#include "roughsmile/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace roughsmile {

namespace {

constexpr double kQuadHMin = 0.02;  // quadrature-backed paths degrade below this

void check_hurst(double H) {
    if (!(H > 0.0) || H > 0.5)
        throw std::domain_error("Hurst exponent must lie in (0, 1/2]");
}

void check_hurst_quad(double H) {
    check_hurst(H);
    if (H < kQuadHMin)
        throw std::domain_error("quadrature-backed kernel evaluation requires H >= 0.02");
}

double beta_function(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

}  // namespace

KernelSpec KernelSpec::riemann_liouville(double H) {
    check_hurst(H);
    KernelSpec k;
    k.H_ = H;
    k.kind_ = KernelKind::RiemannLiouville;
    k.c1_ = std::sqrt(2.0 * H) / (H + 0.5);
    return k;
}

KernelSpec KernelSpec::tabulated(double H, const std::function<double(double)>& f_K,
                                 int n_cheb) {
    check_hurst_quad(H);
    if (n_cheb < 2) throw std::invalid_argument("tabulated kernel needs >= 2 nodes");
    KernelSpec k;
    k.H_ = H;
    k.kind_ = KernelKind::TabulatedSelfSimilar;
    k.cheb_x_.resize(n_cheb + 1);
    k.cheb_f_.resize(n_cheb + 1);
    k.cheb_w_.resize(n_cheb + 1);
    for (int j = 0; j <= n_cheb; ++j) {
        const double x = 0.5 * (1.0 + std::cos(j * M_PI / n_cheb));
        k.cheb_x_[j] = x;
        k.cheb_f_[j] = f_K(std::max(x, 1e-12));
        k.cheb_w_[j] = (j % 2 == 0 ? 1.0 : -1.0) * ((j == 0 || j == n_cheb) ? 0.5 : 1.0);
    }
    const double p = H + 0.5;
    auto g = [&](double u) { return k.shape(1.0 - std::pow(u, 1.0 / p)); };
    k.c1_ = integrate_adaptive(g, 0.0, 1.0, 1e-13).value / p;
    return k;
}

KernelSpec KernelSpec::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel file: " + path);
    std::string header;
    std::getline(in, header);
    double H = -1.0;
    if (auto pos = header.find("H="); pos != std::string::npos)
        H = std::stod(header.substr(pos + 2));
    if (header.rfind("# fK", 0) != 0 || H < 0.0)
        throw std::runtime_error("kernel file must start with '# fK H=<value>'");
    std::vector<double> r, f;
    double a, b;
    while (in >> a >> b) {
        r.push_back(a);
        f.push_back(b);
    }
    if (r.size() < 2) throw std::runtime_error("kernel file has fewer than 2 samples");
    // resample onto the Chebyshev grid by linear interpolation of the table
    auto interp = [&](double x) {
        if (x <= r.front()) return f.front();
        if (x >= r.back()) return f.back();
        auto it = std::upper_bound(r.begin(), r.end(), x);
        const size_t i = static_cast<size_t>(it - r.begin());
        const double w = (x - r[i - 1]) / (r[i] - r[i - 1]);
        return (1.0 - w) * f[i - 1] + w * f[i];
    };
    return tabulated(H, interp);
}

double KernelSpec::shape(double r) const {
    if (kind_ == KernelKind::RiemannLiouville) return std::sqrt(2.0 * H_);
    // barycentric interpolation on the Chebyshev grid
    r = std::clamp(r, 0.0, 1.0);
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < cheb_x_.size(); ++j) {
        const double d = r - cheb_x_[j];
        if (std::fabs(d) < 1e-14) return cheb_f_[j];
        const double q = cheb_w_[j] / d;
        num += q * cheb_f_[j];
        den += q;
    }
    return num / den;
}

double KernelSpec::operator()(double t, double s) const {
    if (t <= s || t <= 0.0) return 0.0;
    return std::pow(t - s, H_ - 0.5) * shape(s / t);
}

double KernelSpec::k1(double t) const {
    if (t <= 0.0) return 0.0;
    return c1_ * std::pow(t, H_ + 0.5);
}

double KernelSpec::kbar1(double u) const {
    if (u >= 1.0) return 0.0;
    if (u < 0.0) throw std::domain_error("adjoint_k1: u must lie in [0,1]");
    const double p = H_ + 0.5;
    if (kind_ == KernelKind::RiemannLiouville)
        return std::sqrt(2.0 * H_) / p * std::pow(1.0 - u, p);
    // substitute v = (t-u)^{H+1/2}: bounded integrand
    auto g = [&](double v) {
        const double t = u + std::pow(v, 1.0 / p);
        return shape(u / std::max(t, 1e-300));
    };
    return integrate_adaptive(g, 0.0, std::pow(1.0 - u, p), 1e-12).value / p;
}

double adjoint_k1(const KernelSpec& kernel, double u) { return kernel.kbar1(u); }

KFunctionals kfunc_closed_form(double H) {
    check_hurst(H);
    KFunctionals kf;
    kf.k1_1 = std::sqrt(2.0 * H) / ((H + 0.5) * (H + 1.5));
    kf.k2_1 = 1.0 / (2.0 * H + 1.0);
    kf.k1sq_1 = H / ((H + 1.0) * (H + 0.5) * (H + 0.5));
    kf.kbar1sq_1 = kf.k1sq_1;
    kf.k1_kbar1 = 2.0 * H / ((H + 0.5) * (H + 0.5)) * beta_function(H + 1.5, H + 1.5);
    return kf;
}

KFunctionalsQuad kfunc_quadrature(const KernelSpec& kernel, double tol) {
    const double H = kernel.hurst();
    check_hurst_quad(H);
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    const double p = H + 0.5;

    KFunctionalsQuad out;
    double max_err = 0.0;
    bool ok = true;
    auto track = [&](const QuadratureResult& r) {
        max_err = std::max(max_err, r.error_estimate);
        ok = ok && r.converged;
        return r.value;
    };

    // c1 by quadrature with u = (1-r)^{H+1/2}; K1(t) = c1 t^{H+1/2}
    auto gc1 = [&](double u) { return kernel.shape(1.0 - std::pow(u, 1.0 / p)); };
    const double c1 = track(integrate_adaptive(gc1, 0.0, 1.0, tol * 0.1)) / p;

    out.values.k1_1 = c1 / (H + 1.5);
    out.values.k1sq_1 = c1 * c1 / (2.0 * H + 2.0);

    // <K^2 1,1> = 1/(2H+1) int_0^1 (1-r)^{2H-1} f_K(r)^2 dr, w = (1-r)^{2H}
    auto gk2 = [&](double w) {
        const double f = kernel.shape(1.0 - std::pow(w, 1.0 / (2.0 * H)));
        return f * f;
    };
    out.values.k2_1 =
        track(integrate_adaptive(gk2, 0.0, 1.0, tol * 0.1)) / (2.0 * H * (2.0 * H + 1.0));

    // <(Kbar1)^2,1> and <K1,Kbar1>: iterated 1-D quadratures, inner pass in kbar1()
    auto gbar2 = [&](double u) {
        const double kb = kernel.kbar1(u);
        return kb * kb;
    };
    out.values.kbar1sq_1 = track(integrate_adaptive(gbar2, 0.0, 1.0, tol * 0.2));

    auto gmix = [&](double u) { return std::pow(u, p) * kernel.kbar1(u); };
    out.values.k1_kbar1 = c1 * track(integrate_adaptive(gmix, 0.0, 1.0, tol * 0.2));

    out.max_error = max_err;
    out.converged = ok;
    return out;
}

double adjoint_k1_mean_quadrature(const KernelSpec& kernel, double tol) {
    auto g = [&](double u) { return kernel.kbar1(u); };
    return integrate_adaptive(g, 0.0, 1.0, tol).value;
}

double convolve(const KernelSpec& kernel, const std::function<double(double)>& f,
                double t, double tol) {
    if (t < 0.0 || t > 1.0) throw std::domain_error("convolve: t must lie in [0,1]");
    if (t == 0.0) return 0.0;
    const double p = kernel.hurst() + 0.5;
    // s = t(1 - u^{1/p}) removes the diagonal singularity
    auto g = [&](double u) {
        const double r = 1.0 - std::pow(u, 1.0 / p);
        return kernel.shape(r) * f(t * r);
    };
    return std::pow(t, p) / p * integrate_adaptive(g, 0.0, 1.0, tol).value;
}

double convolve_indicator(const KernelSpec& kernel, double a, double b, double t) {
    if (kernel.kind() != KernelKind::RiemannLiouville) {
        auto f = [a, b](double s) { return (s >= a && s < b) ? 1.0 : 0.0; };
        return convolve(kernel, f, t);
    }
    const double H = kernel.hurst();
    const double p = H + 0.5;
    const double c = std::sqrt(2.0 * H) / p;
    auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
    return c * (std::pow(pos(t - a), p) - std::pow(pos(t - b), p));
}

}  // namespace roughsmile
