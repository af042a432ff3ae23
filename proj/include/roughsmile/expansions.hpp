#pragma once

#include <functional>
#include <optional>

#include "roughsmile/kernels.hpp"
#include "roughsmile/ritz.hpp"
#include "roughsmile/volmodel.hpp"

namespace roughsmile {

// Closed-form at-the-money coefficients: energy derivatives at 0, smile level
// and curvature, and the term-structure coefficient a0.
struct AtmCoefficients {
    double sigma0 = 0.0;
    double sigma_prime0 = 0.0;   // Sigma'(0)
    double sigma_second0 = 0.0;  // Sigma''(0)
    double a0 = 0.0;
    double lambda2 = 0.0;  // Lambda''(0)
    double lambda3 = 0.0;  // Lambda'''(0)
    double lambda4 = 0.0;  // Lambda^(4)(0)
    double C_K_rho = 0.0;
    double Cbar_K_rho = 0.0;
    double D_K_rho = 0.0;
    double Dbar_K_rho = 0.0;
};

AtmCoefficients atm_coefficients(const VolModel& model, const KFunctionals& kf,
                                 double rho, double H);

enum class CurvatureSign { Negative, Zero, Positive };
CurvatureSign curvature_sign(const VolModel& model, const KFunctionals& kf, double rho);

enum class ASource { KL, Atm };

// sigma_BS(t, k_t) with k_t = x t^{1/2-H}:
//   KL form      |x|/sqrt(2L) + t^{2H} a(x)/|x| sqrt(L/2)
//   a0 fallback  Sigma(x) + t^{2H} a0/(2 sigma0)   (and sigma0 level at x=0)
double smile_large_deviation(double t, double x, const RitzSolution& sol,
                             std::optional<double> a_x, const AtmCoefficients& atm,
                             double H, ASource* used = nullptr);

// Sigma(0) + Sigma'(0) x + Sigma''(0)/2 x^2 + t^{2H} a0/(2 sigma0)
double smile_fully_expanded(double t, double x, const AtmCoefficients& atm, double H);

// Moderate deviations, k_t = x t^{1/2-H+beta}: practical volatility form with
// optional a0 t^{2H} term structure.
double smile_moderate_deviation(double t, double x, double beta, int order,
                                const AtmCoefficients& atm, bool include_term_structure,
                                double H);
// Implied-variance form: sum_{j=0}^{n-2} (-1)^j 2^j sigma0^{2(j+1)} M(t,x)^j,
// M = sum_{i=3}^n Lambda^(i)(0)/i! x^{i-2} t^{(i-2) beta}.
double moderate_deviation_variance(double t, double x, double beta, int order,
                                   const AtmCoefficients& atm, double H);

// Call (x>0) / put (x<0) price asymptotics at the large-deviation regime.
double price_asymptotic(double t, double x, const RitzSolution& sol, double A_x,
                        double sigma_x_sq, double H);
// Moderate-deviation price asymptotics.
double moderate_price_asymptotic(double t, double x, double beta, int order,
                                 const AtmCoefficients& atm, double H);

struct SkewCurvature {
    double skew_fd = 0.0;
    double curvature_fd = 0.0;
    double skew_predicted = 0.0;       // (Sigma(x)-Sigma(-x))/(2x) t^{H-1/2}
    double curvature_predicted = 0.0;  // (Sigma(x)+Sigma(-x)-2 Sigma(0))/x^2 t^{2H-1}
};

// Finite-difference skew/curvature of any smile function sigma(t, x), plus the
// predicted asymptotic equivalents built from a level function Sigma(x).
SkewCurvature skew_curvature_finite_difference(
    double t, double x, const std::function<double(double, double)>& smile,
    const std::function<double(double)>& sigma_level_fn, double H);

}  // namespace roughsmile
