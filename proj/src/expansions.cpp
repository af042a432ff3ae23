#include "roughsmile/expansions.hpp"

#include <cmath>
#include <stdexcept>

namespace roughsmile {

AtmCoefficients atm_coefficients(const VolModel& m, const KFunctionals& kf,
                                 double rho, double H) {
    const double s0 = m.sigma0, sp = m.sigma0_prime, spp = m.sigma0_second,
                 sd = m.sigma0_dot;
    const double r2 = rho * rho;

    AtmCoefficients a;
    a.sigma0 = s0;

    a.lambda2 = 1.0 / (s0 * s0);
    a.lambda3 = -6.0 * rho * sp / std::pow(s0, 4) * kf.k1_1;
    a.lambda4 =
        12.0 * sp * sp / std::pow(s0, 6) *
            (9.0 * r2 * kf.k1_1 * kf.k1_1 - r2 * kf.k1sq_1 - kf.kbar1sq_1 -
             2.0 * r2 * kf.k1_kbar1) -
        12.0 * spp / std::pow(s0, 5) * r2 * kf.k1sq_1;

    a.sigma_prime0 = rho * sp * kf.k1_1 / s0;
    a.sigma_second0 =
        2.0 * (sp * sp / std::pow(s0, 3) *
                   (-3.0 * r2 * kf.k1_1 * kf.k1_1 + 0.5 * r2 * kf.k1sq_1 +
                    0.5 * kf.kbar1sq_1 + r2 * kf.k1_kbar1) +
               spp / (s0 * s0) * 0.5 * r2 * kf.k1sq_1);

    a.C_K_rho = 0.5 * kf.k2_1 - 1.5 * kf.kbar1sq_1 +
                r2 * (8.5 * kf.k1_1 * kf.k1_1 - 1.5 * kf.k1sq_1 - 3.0 * kf.k1_kbar1);
    a.Cbar_K_rho = 0.5 * kf.k2_1 - 1.5 * r2 * kf.k1sq_1;
    a.D_K_rho = kf.k2_1 - kf.kbar1sq_1 +
                r2 * (3.0 * kf.k1_1 * kf.k1_1 - kf.k1sq_1 - 2.0 * kf.k1_kbar1);
    a.Dbar_K_rho = kf.k2_1 - r2 * kf.k1sq_1;

    a.a0 = sp * sp * a.D_K_rho + s0 * spp * a.Dbar_K_rho + s0 * sd / (H + 0.5);
    if (H == 0.5) a.a0 += rho * sp * s0 * s0 * kf.k1_1;
    return a;
}

CurvatureSign curvature_sign(const VolModel& m, const KFunctionals& kf, double rho) {
    if (m.sigma0 == 0.0) throw std::domain_error("curvature_sign: sigma0 must be nonzero");
    const double r2 = rho * rho;
    const double s0 = m.sigma0, sp = m.sigma0_prime, spp = m.sigma0_second;
    const double second =
        2.0 * (sp * sp / std::pow(s0, 3) *
                   (-3.0 * r2 * kf.k1_1 * kf.k1_1 + 0.5 * r2 * kf.k1sq_1 +
                    0.5 * kf.kbar1sq_1 + r2 * kf.k1_kbar1) +
               spp / (s0 * s0) * 0.5 * r2 * kf.k1sq_1);
    if (second > 1e-12) return CurvatureSign::Positive;
    if (second < -1e-12) return CurvatureSign::Negative;
    return CurvatureSign::Zero;
}

double smile_large_deviation(double t, double x, const RitzSolution& sol,
                             std::optional<double> a_x, const AtmCoefficients& atm,
                             double H, ASource* used) {
    const double t2h = std::pow(t, 2.0 * H);
    if (x != 0.0 && a_x.has_value()) {
        if (used) *used = ASource::KL;
        const double lam = sol.lambda;
        return std::fabs(x) / std::sqrt(2.0 * lam) +
               t2h * (*a_x) / std::fabs(x) * std::sqrt(0.5 * lam);
    }
    if (used) *used = ASource::Atm;
    const double level = (x == 0.0) ? atm.sigma0 : sigma_level(sol);
    return level + t2h * atm.a0 / (2.0 * atm.sigma0);
}

double smile_fully_expanded(double t, double x, const AtmCoefficients& atm, double H) {
    return atm.sigma0 + atm.sigma_prime0 * x + 0.5 * atm.sigma_second0 * x * x +
           std::pow(t, 2.0 * H) * atm.a0 / (2.0 * atm.sigma0);
}

namespace {

void check_moderate(double beta, int order, double H) {
    if (!(H < 0.5)) throw std::domain_error("moderate deviations require H < 1/2");
    if (order < 2 || order > 4)
        throw std::domain_error("moderate deviations: order n must lie in {2,3,4}");
    if (!(beta > 2.0 * H / (order + 1) && beta <= 2.0 * H / order))
        throw std::domain_error("moderate deviations: beta must lie in (2H/(n+1), 2H/n]");
}

}  // namespace

double smile_moderate_deviation(double t, double x, double beta, int order,
                                const AtmCoefficients& atm, bool include_term_structure,
                                double H) {
    check_moderate(beta, order, H);
    const double tb = std::pow(t, beta);
    double v = atm.sigma0 + atm.sigma_prime0 * x * tb;
    if (order >= 3) v += 0.5 * atm.sigma_second0 * x * x * tb * tb;
    if (include_term_structure) v += atm.a0 / (2.0 * atm.sigma0) * std::pow(t, 2.0 * H);
    return v;
}

double moderate_deviation_variance(double t, double x, double beta, int order,
                                   const AtmCoefficients& atm, double H) {
    check_moderate(beta, order, H);
    const double s02 = atm.sigma0 * atm.sigma0;
    // M(t,x) = sum_{i=3}^{n} Lambda^(i)(0)/i! x^{i-2} t^{(i-2) beta}
    double M = 0.0;
    if (order >= 3) M += atm.lambda3 / 6.0 * x * std::pow(t, beta);
    if (order >= 4) M += atm.lambda4 / 24.0 * x * x * std::pow(t, 2.0 * beta);
    double var = 0.0;
    double term = s02;
    for (int j = 0; j <= order - 2; ++j) {
        var += term;
        term *= -2.0 * s02 * M;
    }
    return var;
}

double price_asymptotic(double t, double x, const RitzSolution& sol, double A_x,
                        double sigma_x_sq, double H) {
    if (x == 0.0) throw std::domain_error("price_asymptotic: x must be nonzero");
    const double lp = rate_derivative(sol, sigma_x_sq);
    return std::exp(-sol.lambda / std::pow(t, 2.0 * H)) * std::pow(t, 0.5 + 2.0 * H) *
           A_x / (lp * lp * std::sqrt(sigma_x_sq) * std::sqrt(2.0 * M_PI));
}

double moderate_price_asymptotic(double t, double x, double beta, int order,
                                 const AtmCoefficients& atm, double H) {
    check_moderate(beta, order, H);
    if (!(x > 0.0)) throw std::domain_error("moderate price asymptotics: x must be > 0");
    const double lambdas[5] = {0.0, 0.0, atm.lambda2, atm.lambda3, atm.lambda4};
    double expo = 0.0;
    double fact = 2.0;  // i!
    for (int i = 2; i <= order; ++i) {
        expo += lambdas[i] / fact * std::pow(x, i) * std::pow(t, i * beta - 2.0 * H);
        fact *= (i + 1);
    }
    return std::exp(-expo) * std::pow(t, 0.5 + 2.0 * H - 2.0 * beta) *
           std::pow(atm.sigma0, 3) / (x * x * std::sqrt(2.0 * M_PI));
}

SkewCurvature skew_curvature_finite_difference(
    double t, double x, const std::function<double(double, double)>& smile,
    const std::function<double(double)>& sigma_level_fn, double H) {
    if (x == 0.0) throw std::domain_error("skew/curvature: x must be nonzero");
    const double kt = x * std::pow(t, 0.5 - H);
    const double up = smile(t, x), dn = smile(t, -x), at = smile(t, 0.0);
    SkewCurvature sc;
    sc.skew_fd = (up - dn) / (2.0 * kt);
    sc.curvature_fd = (up + dn - 2.0 * at) / (kt * kt);
    const double lu = sigma_level_fn(x), ld = sigma_level_fn(-x), l0 = sigma_level_fn(0.0);
    sc.skew_predicted = (lu - ld) / (2.0 * x) * std::pow(t, H - 0.5);
    sc.curvature_predicted = (lu + ld - 2.0 * l0) / (x * x) * std::pow(t, 2.0 * H - 1.0);
    return sc;
}

}  // namespace roughsmile
